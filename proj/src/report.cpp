#include "mbaq/report.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace mbaq {

std::vector<MethodAggregate> aggregate_rows(const std::vector<SweepRow>& rows) {
  std::vector<MethodAggregate> out;
  std::map<std::string, std::size_t> index;
  for (const SweepRow& r : rows) {
    auto [it, inserted] = index.emplace(r.method, out.size());
    if (inserted) {
      out.emplace_back();
      out.back().method = r.method;
    }
    MethodAggregate& a = out[it->second];
    ++a.frames;
    a.total_bits += r.bits;
    a.mean_acc_r += r.acc_r;
    a.mean_acc_c += r.acc_c;
    a.mean_abs_dacc += std::abs(r.acc_c - r.acc_r);
    a.feasible_fraction += r.feasible ? 1.0 : 0.0;
    a.mean_ssim += r.mean_ssim;
    a.mean_psnr += r.psnr;
  }
  for (MethodAggregate& a : out) {
    const double n = a.frames;
    a.mean_bits = static_cast<double>(a.total_bits) / n;
    a.bitrate_bps = static_cast<double>(a.total_bits) * kFramesPerSecond / n;
    a.mean_acc_r /= n;
    a.mean_acc_c /= n;
    a.mean_abs_dacc /= n;
    a.feasible_fraction /= n;
    a.mean_ssim /= n;
    a.mean_psnr /= n;
  }
  return out;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows,
                             const std::vector<MethodAggregate>& aggregates) {
  std::ostringstream out;
  out << "row_type,scene_id,frame,method,frames,bits,bitrate_bps,acc_r,acc_c,abs_dacc,feasible,"
         "mean_ssim,psnr_db,emphasis_sum\n";
  for (const SweepRow& r : rows) {
    out << "frame," << r.scene_id << ',' << r.frame << ',' << r.method << ",1," << r.bits << ','
        << format_double(static_cast<double>(r.bits) * kFramesPerSecond) << ','
        << format_double(r.acc_r) << ',' << format_double(r.acc_c) << ','
        << format_double(std::abs(r.acc_c - r.acc_r)) << ',' << (r.feasible ? 1 : 0) << ','
        << format_double(r.mean_ssim) << ',' << format_double(r.psnr) << ',';
    if (r.emphasis_sum) out << *r.emphasis_sum;
    out << '\n';
  }
  for (const MethodAggregate& a : aggregates) {
    out << "aggregate,,," << a.method << ',' << a.frames << ',' << a.total_bits << ','
        << format_double(a.bitrate_bps) << ',' << format_double(a.mean_acc_r) << ','
        << format_double(a.mean_acc_c) << ',' << format_double(a.mean_abs_dacc) << ','
        << format_double(a.feasible_fraction) << ',' << format_double(a.mean_ssim) << ','
        << format_double(a.mean_psnr) << ",\n";
  }
  return out.str();
}

Json aggregate_to_json(const MethodAggregate& a) {
  return {{"method", a.method},
          {"frames", a.frames},
          {"total_bits", a.total_bits},
          {"mean_bits", a.mean_bits},
          {"bitrate_bps", a.bitrate_bps},
          {"mean_acc_r", a.mean_acc_r},
          {"mean_acc_c", a.mean_acc_c},
          {"mean_abs_dacc", a.mean_abs_dacc},
          {"feasible_fraction", a.feasible_fraction},
          {"mean_ssim", a.mean_ssim},
          {"mean_psnr", a.mean_psnr}};
}

std::string format_epoch_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << "epoch,loss,loss1,loss2,acc_c,acc_r,p,mean_emphasis,lr,val_abs_dacc,val_mean_emphasis\n";
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.loss1) << ','
        << format_double(e.loss2) << ',' << format_double(e.acc_c) << ',' << format_double(e.acc_r)
        << ',' << format_double(e.p) << ',' << format_double(e.mean_emphasis) << ','
        << format_double(e.lr) << ',' << format_double(e.val_abs_dacc) << ','
        << format_double(e.val_mean_emphasis) << '\n';
  }
  return out.str();
}

}  // namespace mbaq
