#include "obsbound/simplex_lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace obsbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-11;

enum class Status : unsigned char { Lower, Upper, Basic };

}  // namespace

LpSolution solve_elastic_lp(const MatrixXd& rows, const VectorXd& rhs,
                            const VectorXd& cost, const VectorXd& upper,
                            const VectorXd& elastic_cost) {
  const int m = static_cast<int>(rows.rows());
  const int nx = static_cast<int>(rows.cols());
  require(rhs.size() == m && elastic_cost.size() == m,
          "row data sizes disagree");
  require(cost.size() == nx && upper.size() == nx,
          "column data sizes disagree");

  // Columns: [x (nx), s (m), w (m)]. Row j: rows_j.x - s_j + w_j = rhs_j,
  // flipped when rhs_j < 0 so that the starting basis values are nonnegative.
  const int n = nx + 2 * m;
  MatrixXd t(m, n);
  VectorXd c = VectorXd::Zero(n);
  VectorXd ub = VectorXd::Constant(n, kInf);
  c.head(nx) = cost;
  ub.head(nx) = upper;
  for (int j = 0; j < m; ++j) c(nx + j) = elastic_cost(j);

  std::vector<int> basis(m);
  std::vector<Status> status(n, Status::Lower);
  VectorXd xb(m);
  for (int r = 0; r < m; ++r) {
    const double flip = rhs(r) < 0.0 ? -1.0 : 1.0;
    t.row(r).setZero();
    t.row(r).head(nx) = flip * rows.row(r);
    t(r, nx + r) = -flip;      // s_r
    t(r, nx + m + r) = flip;   // w_r
    xb(r) = flip * rhs(r);
    basis[r] = flip < 0.0 ? nx + r : nx + m + r;
    status[basis[r]] = Status::Basic;
  }

  const int max_iter = 200 * (m + n);
  int iter = 0;
  int stall = 0;
  for (; iter < max_iter; ++iter) {
    // Reduced costs via the basic cost row. The tolerance is scaled per
    // column: cancellation in c_B . t_j grows with the magnitudes involved
    // (elastic costs can be huge), so a global threshold would either stall
    // cheap columns or chatter on expensive ones.
    VectorXd cb(m);
    for (int r = 0; r < m; ++r) cb(r) = c(basis[r]);
    const VectorXd cb_abs = cb.cwiseAbs();
    const bool bland = stall > 4 * m;

    int enter = -1;
    double enter_dir = 0.0;
    double best = 0.0;
    for (int j = 0; j < n; ++j) {
      if (status[j] == Status::Basic) continue;
      if (ub(j) <= 0.0) continue;  // fixed at zero
      const double z = c(j) - cb.dot(t.col(j));
      const double tol_j =
          1e-10 * (1.0 + std::abs(c(j)) + cb_abs.dot(t.col(j).cwiseAbs()));
      double score = 0.0, dir = 0.0;
      if (status[j] == Status::Lower && z < -tol_j) {
        score = -z;
        dir = +1.0;
      } else if (status[j] == Status::Upper && z > tol_j) {
        score = z;
        dir = -1.0;
      } else {
        continue;
      }
      if (bland) {  // first eligible index
        enter = j;
        enter_dir = dir;
        break;
      }
      if (score > best) {
        best = score;
        enter = j;
        enter_dir = dir;
      }
    }
    if (enter < 0) break;  // optimal

    // Ratio test: how far can the entering variable move off its bound.
    double theta = ub(enter) == kInf ? kInf : ub(enter);
    int leave_row = -1;
    bool leave_at_upper = false;
    for (int r = 0; r < m; ++r) {
      const double delta = enter_dir * t(r, enter);  // rate of decrease of xb
      if (delta > kPivotTol) {
        const double cap = xb(r) / delta;
        if (cap < theta - 1e-13) {
          theta = cap;
          leave_row = r;
          leave_at_upper = false;
        }
      } else if (delta < -kPivotTol && ub(basis[r]) < kInf) {
        const double cap = (ub(basis[r]) - xb(r)) / (-delta);
        if (cap < theta - 1e-13) {
          theta = cap;
          leave_row = r;
          leave_at_upper = true;
        }
      }
    }
    require(theta < 1e13, "linear subproblem is unbounded");
    stall = theta < 1e-12 ? stall + 1 : 0;

    xb -= (enter_dir * theta) * t.col(enter);
    if (leave_row < 0) {
      // Bound flip, no basis change.
      status[enter] =
          status[enter] == Status::Lower ? Status::Upper : Status::Lower;
      continue;
    }
    const int leaving = basis[leave_row];
    status[leaving] = leave_at_upper ? Status::Upper : Status::Lower;
    const double enter_from = status[enter] == Status::Lower ? 0.0 : ub(enter);
    status[enter] = Status::Basic;
    basis[leave_row] = enter;
    xb(leave_row) = enter_from + enter_dir * theta;

    const double piv = t(leave_row, enter);
    t.row(leave_row) /= piv;
    for (int r = 0; r < m; ++r) {
      if (r == leave_row) continue;
      const double f = t(r, enter);
      if (f != 0.0) t.row(r) -= f * t.row(leave_row);
    }
  }
  require(iter < max_iter, "simplex iteration limit exceeded");

  VectorXd full = VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (status[j] == Status::Upper) full(j) = ub(j);
  }
  for (int r = 0; r < m; ++r) full(basis[r]) = xb(r);

  LpSolution sol;
  sol.x = full.head(nx);
  sol.objective = cost.dot(sol.x);
  sol.elastic_total = full.segment(nx, m).sum();
  sol.iterations = iter;
  return sol;
}

}  // namespace obsbound
