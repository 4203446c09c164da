#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <vector>

#include "mlbpgd/linops.hpp"

using namespace mlbpgd;

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(int reps, const std::function<void()>& body) {
    body();  // warm up
    auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) body();
    auto t1 = Clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

GridVector random_vec(std::size_t n, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.1, 1.0);
    GridVector v(n);
    for (auto& x : v.data) x = u(rng);
    return v;
}

void row(const char* name, int reps, const std::function<GridVector()>& parallel,
         const std::function<GridVector()>& serial) {
    GridVector a = parallel();
    GridVector b = serial();
    const double diff = max_abs_diff(a, b);
    const double tp = time_ms(reps, [&] { parallel(); });
    const double ts = time_ms(reps, [&] { serial(); });
    std::printf("%-28s %10.3f ms %10.3f ms %8.2fx   %s\n", name, ts, tp,
                ts / tp, diff == 0.0 ? "bitwise equal" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 40;
    const int side = 127;
    std::mt19937 rng(2024);

    LinearOperatorHandle blur =
        LinearOperatorHandle::conv2d(gaussian_psf(9, 1.5), 9, side);
    std::vector<double> angles(60);
    for (int j = 0; j < 60; ++j) angles[j] = M_PI * j / 60.0;
    LinearOperatorHandle proj = parallel_beam(side, angles, side);
    TransferPair t = TransferPair::two_d(side);

    GridVector img = random_vec(static_cast<std::size_t>(side) * side, rng);
    GridVector sino = random_vec(static_cast<std::size_t>(proj.rows()), rng);
    GridVector coarse = random_vec(t.coarse_size(), rng);

    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");
    row("conv2d apply", reps, [&] { return blur.apply(img); },
        [&] { return blur.apply_serial(img); });
    row("conv2d adjoint", reps, [&] { return blur.apply_adjoint(img); },
        [&] { return blur.apply_adjoint_serial(img); });
    row("projector apply", reps, [&] { return proj.apply(img); },
        [&] { return proj.apply_serial(img); });
    row("projector adjoint", reps, [&] { return proj.apply_adjoint(sino); },
        [&] { return proj.apply_adjoint_serial(sino); });
    row("prolongation", reps, [&] { return t.prolong(coarse); },
        [&] { return t.prolong_serial(coarse); });
    row("restriction", reps, [&] { return t.restrict_fine(img); },
        [&] { return t.restrict_fine_serial(img); });
    return 0;
}
