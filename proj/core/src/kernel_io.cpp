#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ergodrift/errors.hpp"
#include "ergodrift/simulate.hpp"
#include "ergodrift/transition.hpp"

namespace ergodrift {

static_assert(std::endian::native == std::endian::little,
              "binary kernel files assume a little-endian host");

void write_kernel(const TransitionKernel& k, const std::string& path, KernelFileFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    const auto& g = k.grid();
    bool binary = format == KernelFileFormat::binary;
    out << "ERGODRIFT-KERNEL " << (binary ? "binary" : "text") << ' ' << format_real(g.lo()) << ' '
        << format_real(g.hi()) << ' ' << g.size() << ' ' << format_real(k.delta_t()) << '\n';
    int n = k.size();
    const auto& m = k.matrix();
    if (binary) {
        std::vector<double> row(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) row[j] = m(i, j);
            out.write(reinterpret_cast<const char*>(row.data()),
                      static_cast<std::streamsize>(n * sizeof(double)));
        }
    } else {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) out << (j ? " " : "") << format_real(m(i, j));
            out << '\n';
        }
    }
    if (!out) throw ValidationError("failed writing kernel to '" + path + "'");
}

TransitionKernel read_kernel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open kernel file '" + path + "'");
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic, kind;
    double lo = 0, hi = 0, dt = 0;
    int n = 0;
    if (!(hs >> magic >> kind >> lo >> hi >> n >> dt) || magic != "ERGODRIFT-KERNEL" ||
        (kind != "text" && kind != "binary")) {
        throw ValidationError("malformed kernel header in '" + path + "'");
    }
    SpatialGrid grid(lo, hi, n);
    Eigen::MatrixXd m(n, n);
    if (kind == "binary") {
        std::vector<double> row(n);
        for (int i = 0; i < n; ++i) {
            in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(n * sizeof(double)));
            if (!in) throw ValidationError("truncated binary kernel '" + path + "'");
            for (int j = 0; j < n; ++j) m(i, j) = row[j];
        }
    } else {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (!(in >> m(i, j))) throw ValidationError("truncated text kernel '" + path + "'");
            }
        }
    }
    return TransitionKernel(grid, dt, std::move(m));
}

}  // namespace ergodrift
