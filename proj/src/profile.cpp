// SPDX-License-Identifier: Apache-2.0

#include "profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "fft.hpp"

namespace score {

double SpectrumProfile::value_at(double f) const {
    if (freq.empty()) fail(ErrorCode::invalid_argument, "value_at: empty profile");
    if (f <= freq.front()) return power.front();
    if (f >= freq.back()) return power.back();
    auto it = std::upper_bound(freq.begin(), freq.end(), f);
    size_t hi = static_cast<size_t>(it - freq.begin());
    size_t lo = hi - 1;
    double w = (f - freq[lo]) / (freq[hi] - freq[lo]);
    return power[lo] + w * (power[hi] - power[lo]);
}

void SpectrumProfile::save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io_error, "cannot open for writing: " + path.string());
    out << "freq,power,count\n";
    char buf[128];
    for (size_t i = 0; i < bins(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%lld\n", freq[i], power[i],
                      static_cast<long long>(count[i]));
        out << buf;
    }
    if (!out) fail(ErrorCode::io_error, "write failed: " + path.string());
}

SpectrumProfile SpectrumProfile::load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::io_error, "empty profile file: " + path.string());
    if (line != "freq,power,count" && line != "freq,power,count\r") {
        fail(ErrorCode::io_error, "bad profile header in " + path.string());
    }
    SpectrumProfile p;
    try {
        while (std::getline(in, line)) {
            if (line.empty() || line == "\r") continue;
            std::istringstream row(line);
            std::string fld;
            if (!std::getline(row, fld, ',')) break;
            double f = std::stod(fld);
            if (!std::getline(row, fld, ',')) {
                fail(ErrorCode::io_error, "short row in " + path.string());
            }
            double pw = std::stod(fld);
            if (!std::getline(row, fld, ',')) {
                fail(ErrorCode::io_error, "short row in " + path.string());
            }
            long long ct = std::stoll(fld);
            p.freq.push_back(f);
            p.power.push_back(pw);
            p.count.push_back(ct);
        }
    } catch (const std::logic_error&) {
        fail(ErrorCode::io_error, "malformed number in " + path.string());
    }
    validate_profile(p, "load_csv");
    return p;
}

SpectrumProfile SpectrumProfile::power_law(int bins, double amplitude, double exponent, double f0) {
    if (bins < 2) fail(ErrorCode::invalid_argument, "power_law: need at least 2 bins");
    if (amplitude < 0.0) fail(ErrorCode::invalid_argument, "power_law: amplitude must be >= 0");
    if (f0 <= 0.0) fail(ErrorCode::invalid_argument, "power_law: f0 must be > 0");
    RadialBinning binning(bins);
    SpectrumProfile p;
    for (int b = 0; b < bins; ++b) {
        double f = binning.center(b);
        p.freq.push_back(f);
        p.power.push_back(amplitude * std::pow(f + f0, -exponent));
        p.count.push_back(1);
    }
    return p;
}

SpectrumProfile SpectrumProfile::flat(int bins, double value) {
    if (bins < 2) fail(ErrorCode::invalid_argument, "flat: need at least 2 bins");
    if (value < 0.0) fail(ErrorCode::invalid_argument, "flat: value must be >= 0");
    RadialBinning binning(bins);
    SpectrumProfile p;
    for (int b = 0; b < bins; ++b) {
        p.freq.push_back(binning.center(b));
        p.power.push_back(value);
        p.count.push_back(1);
    }
    return p;
}

void validate_profile(const SpectrumProfile& p, const char* context) {
    std::string ctx(context);
    if (p.freq.size() != p.power.size() || p.freq.size() != p.count.size()) {
        fail(ErrorCode::invalid_argument, ctx + ": profile field lengths differ");
    }
    if (p.freq.size() < 2) fail(ErrorCode::invalid_argument, ctx + ": profile needs >= 2 bins");
    for (size_t i = 0; i < p.freq.size(); ++i) {
        if (!std::isfinite(p.freq[i]) || !std::isfinite(p.power[i])) {
            fail(ErrorCode::data_integrity, ctx + ": profile contains NaN or Inf");
        }
        if (p.power[i] < 0.0) fail(ErrorCode::invalid_argument, ctx + ": negative power bin");
        if (p.count[i] < 1) fail(ErrorCode::invalid_argument, ctx + ": bin count below 1");
        if (i > 0 && !(p.freq[i] > p.freq[i - 1])) {
            fail(ErrorCode::invalid_argument, ctx + ": freq not strictly increasing");
        }
    }
}

RadialBinning::RadialBinning(int b) : bins(b) {
    if (b < 2) fail(ErrorCode::invalid_argument, "binning: need at least 2 bins");
    delta = max_radial_freq() / static_cast<double>(b);
}

int RadialBinning::bin_of(double r) const {
    int b = static_cast<int>(std::ceil(r / delta)) - 1;
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    return b;
}

std::vector<double> RadialBinning::centers() const {
    std::vector<double> c(static_cast<size_t>(bins));
    for (int b = 0; b < bins; ++b) c[static_cast<size_t>(b)] = center(b);
    return c;
}

int max_bins(int height, int width) {
    double ry = std::floor(height / 2.0);
    double rx = std::floor(width / 2.0);
    return static_cast<int>(std::ceil(std::hypot(ry, rx)));
}

int default_bins(int height, int width) {
    int b = static_cast<int>(std::ceil(std::min(height, width) / 2.0));
    return std::max(2, b);
}

}  // namespace score
