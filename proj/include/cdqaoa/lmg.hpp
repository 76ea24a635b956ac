#pragma once

#include "cdqaoa/contopt.hpp"
#include "cdqaoa/types.hpp"

#include <limits>
#include <string>
#include <vector>

namespace cdqaoa {

// Matrices in the |N, n> basis (n spins up, n = 0 is all down), dimension N+1.
SparseMat lmg_hamiltonian(int N, double J, double h);

struct LmgGauge {
    SparseMat Y, XYhat, ZYhat;
};
LmgGauge lmg_gauge_matrices(int N);

struct OverlapPoint {
    double h = 0.0;
    double overlap = 0.0;  // summed over the ground manifold
    int manifold = 1;
};
std::vector<OverlapPoint> overlap_scan(int N, const std::vector<double>& h_grid, double J = 1.0, int workers = 1);

enum class QslMetric { Energy, Fidelity };

struct QslConfig {
    std::vector<std::string> labels{"H1", "H2", "Y"};
    int q = 3;
    QslMetric metric = QslMetric::Energy;
    double tolerance = 1e-3;  // reached when the metric is >= 1 - tolerance
    double coarse_step = 0.1;
    double fine_step = 0.02;
    double window = 0.2;  // fine steps within this distance of pi/2 - h/J
    double t_max = 3.0;
    double J = 1.0;
    SolverConfig solver{1e-8, 500, 4, 0, false};
    int workers = 1;
};

struct QslPoint {
    double h = 0.0;
    double t_qsl = std::numeric_limits<double>::quiet_NaN();  // NaN: never reached on the grid
    ProtocolSequence best;  // protocol that first met the threshold
    double value = 0.0;     // its metric
};

// Ascending scan grid for a given field.
std::vector<double> qsl_t_grid(double h, const QslConfig& cfg);

// Best metric over every legal sequence of length cfg.q at duration T.
struct QslEval {
    ProtocolSequence best;
    double value = 0.0;
};
QslEval qsl_best(const ControlProblem& p, double T, const QslConfig& cfg);

QslPoint qsl_point(int N, double h, const QslConfig& cfg);
std::vector<QslPoint> qsl_scan(int N, const std::vector<double>& h_grid, const QslConfig& cfg);

// Least-squares slope of T_QSL(h) over points with h <= h_max (NaN entries skipped).
double qsl_slope(const std::vector<QslPoint>& points, double h_max);

}  // namespace cdqaoa
