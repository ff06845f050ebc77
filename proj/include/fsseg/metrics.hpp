#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "fsseg/mask.hpp"

namespace fsseg {

// |pred AND gt| / |pred OR gt|. Both masks empty counts as vacuous agreement
// (1.0); exactly one empty gives 0.0.
double iou(const BinaryMask& pred, const BinaryMask& gt);

// Per-class pixel tallies pooled over episodes; IoU = tp / (tp + fp + fn).
struct ClassScore {
    int class_id = 0;
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    void accumulate(const BinaryMask& pred, const BinaryMask& gt);
    void merge(const ClassScore& other);

    bool defined() const { return tp + fp + fn > 0; }
    // 0.0 when undefined; check defined() to distinguish.
    double iou() const;
};

// Unweighted mean of per-class IoUs.
double miou(const std::vector<ClassScore>& per_class);

// Arithmetic mean of per-fold mIoU values.
double crossval_report(const std::vector<double>& per_fold_miou);

// One "fold,class_id,tp,fp,fn,iou,miou" row per class; the miou column
// repeats the fold's pooled mIoU.
void append_csv_rows(std::ostream& os, int fold, const std::vector<ClassScore>& per_class);
void append_csv_header(std::ostream& os);

}  // namespace fsseg
