// Times the bit-width sweep with the parallel driver against the serial one
// and checks that both produce identical results.
#include <chrono>
#include <cstdio>
#include <string>

#include "vitsim/eeg.hpp"
#include "vitsim/model.hpp"
#include "vitsim/sweep.hpp"
#include "vitsim/weights.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace vitsim;

int main(int argc, char** argv) {
    int num_epochs = 4;
    SweepRange wb{4, 8};
    SweepRange ab{4, 8};
    if (argc > 1) num_epochs = std::stoi(argv[1]);
    if (argc > 3) {
        wb = {std::stoi(argv[2]), std::stoi(argv[3])};
        ab = wb;
    }

    ModelConfig cfg;
    const auto fw = generate_float_weights(cfg, 7);
    const auto epochs = generate_epochs(11, num_epochs, cfg.samples_per_epoch());

#ifdef _OPENMP
    std::printf("omp threads: %d\n", omp_get_max_threads());
#else
    std::printf("omp threads: 1 (compiled without OpenMP)\n");
#endif
    std::printf("grid: weights %d..%d x activations %d..%d bits, %d epochs per point\n", wb.lo,
                wb.hi, ab.lo, ab.hi, num_epochs);

    const auto t0 = std::chrono::steady_clock::now();
    const auto serial = sweep_bitwidths_serial(cfg, fw, epochs, wb, ab);
    const auto t1 = std::chrono::steady_clock::now();
    const auto parallel = sweep_bitwidths(cfg, fw, epochs, wb, ab);
    const auto t2 = std::chrono::steady_clock::now();

    const double s_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    const double p_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    std::printf("serial:   %.1f ms\n", s_ms);
    std::printf("parallel: %.1f ms\n", p_ms);
    std::printf("speedup:  %.2fx\n", s_ms / p_ms);

    if (sweep_csv(serial) != sweep_csv(parallel)) {
        std::printf("MISMATCH: serial and parallel sweeps disagree\n");
        return 1;
    }
    std::printf("outputs identical\n");
    return 0;
}
