#include "fsseg/metrics.hpp"

#include <cstdio>

#include "fsseg/error.hpp"

namespace fsseg {

double iou(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.height != gt.height || pred.width != gt.width) {
        throw ShapeError("iou: mask shapes differ");
    }
    validate_mask(pred, "iou pred");
    validate_mask(gt, "iou gt");
    std::int64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        inter += pred.values[i] & gt.values[i];
        uni += pred.values[i] | gt.values[i];
    }
    if (uni == 0) return 1.0;  // both empty: vacuous agreement
    return static_cast<double>(inter) / static_cast<double>(uni);
}

void ClassScore::accumulate(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.height != gt.height || pred.width != gt.width) {
        throw ShapeError("ClassScore::accumulate: mask shapes differ");
    }
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        tp += pred.values[i] & gt.values[i];
        fp += pred.values[i] & static_cast<std::uint8_t>(1 - gt.values[i]);
        fn += static_cast<std::uint8_t>(1 - pred.values[i]) & gt.values[i];
    }
}

void ClassScore::merge(const ClassScore& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
}

double ClassScore::iou() const {
    const std::uint64_t denom = tp + fp + fn;
    if (denom == 0) return 0.0;
    return static_cast<double>(tp) / static_cast<double>(denom);
}

double miou(const std::vector<ClassScore>& per_class) {
    if (per_class.empty()) {
        throw DataError("miou: no classes");
    }
    double acc = 0.0;
    for (const ClassScore& c : per_class) acc += c.iou();
    return acc / static_cast<double>(per_class.size());
}

double crossval_report(const std::vector<double>& per_fold_miou) {
    if (per_fold_miou.empty()) {
        throw DataError("crossval_report: no folds");
    }
    double acc = 0.0;
    for (double v : per_fold_miou) acc += v;
    return acc / static_cast<double>(per_fold_miou.size());
}

void append_csv_header(std::ostream& os) {
    os << "fold,class_id,tp,fp,fn,iou,miou\n";
}

void append_csv_rows(std::ostream& os, int fold,
                     const std::vector<ClassScore>& per_class) {
    const double fold_miou = miou(per_class);
    char buf[160];
    for (const ClassScore& c : per_class) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%llu,%llu,%llu,%.9g,%.9g\n", fold,
                      c.class_id, static_cast<unsigned long long>(c.tp),
                      static_cast<unsigned long long>(c.fp),
                      static_cast<unsigned long long>(c.fn), c.iou(), fold_miou);
        os << buf;
    }
}

}  // namespace fsseg
