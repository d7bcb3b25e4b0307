#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "iga/assembly.hpp"
#include "iga/linalg.hpp"

namespace iga {

enum class PrimalMode { corners, corners_normal_averages, corners_edge_averages };

std::string to_string(PrimalMode mode);
PrimalMode parse_primal_mode(const std::string& name);

/// Per-patch primal constraint rows C^(k) over the gamma coefficients plus
/// the boolean selector R^(k) stored as a local-row -> global-dof map.
/// Corner value constraints are always present; interface averages are
/// appended depending on the mode.
struct PrimalSet {
    int count = 0; // number of global primal DOFs
    std::vector<SparseMatrix> c;
    std::vector<std::vector<int>> global_of_row;
};

PrimalSet build_primal_constraints(const DofMap& dofmap, PrimalMode mode);

/// Signed boolean jump operator: one multiplier per matched non-primal
/// interface coefficient, +1 on the lower patch index. Corner coefficients
/// carry no multipliers.
struct JumpOperator {
    struct Entry {
        int multiplier;
        int gamma;
        double sign;
    };
    struct Provenance {
        int patch_plus, gamma_plus;
        int patch_minus, gamma_minus;
    };

    int count = 0;
    std::vector<std::vector<Entry>> rows; // per patch
    std::vector<Provenance> provenance;

    /// lambda += B^(k) u_gamma
    void accumulate(int k, const Eigen::VectorXd& u_gamma, Eigen::VectorXd& lambda) const;
    /// u_gamma += B^(k)^T lambda
    void accumulate_transpose(int k, const Eigen::VectorXd& lambda,
                              Eigen::VectorXd& u_gamma) const;
};

JumpOperator build_jump_operator(const DofMap& dofmap, const PrimalSet& primal);

/// Dual-primal tearing/interconnecting operator: factorized local saddle
/// systems, energy-minimizing primal basis, primal coarse system, multiplier
/// Schur operator F and the scaled Dirichlet preconditioner.
class IetiOperator {
public:
    IetiOperator(const DofMap& dofmap, std::vector<LocalSystem> locals, PrimalSet primal,
                 JumpOperator jump);

    int multiplier_count() const { return jump_.count; }
    int primal_count() const { return primal_.count; }

    Eigen::VectorXd apply_F(const Eigen::VectorXd& lambda) const;
    Eigen::VectorXd apply_MsD(const Eigen::VectorXd& lambda) const;
    Eigen::VectorXd rhs() const;

    struct Solution {
        PatchwiseField field;
        PcgReport report;
        Eigen::VectorXd multipliers;
    };
    /// PCG on the multiplier system with a seeded random initial guess,
    /// followed by patchwise recovery and primal distribution.
    Solution solve(double tol, unsigned seed, int max_it = 1000) const;

    const DofMap& dofmap() const { return *dofmap_; }
    const PrimalSet& primal() const { return primal_; }
    const JumpOperator& jump() const { return jump_; }

    const Eigen::MatrixXd& primal_matrix() const { return a_pi_; }
    const Eigen::MatrixXd& primal_jump_matrix() const { return b_pi_; }
    const Eigen::VectorXd& primal_rhs() const { return f_pi_; }
    const Eigen::MatrixXd& psi_gamma(int k) const { return patches_[k].psi_gamma; }
    const Eigen::MatrixXd& psi_interior(int k) const { return patches_[k].psi_interior; }
    const Eigen::MatrixXd& phi(int k) const { return patches_[k].phi; }
    const Eigen::VectorXd& scaling(int k) const { return patches_[k].scaling; }
    /// S_A^(k) v applied matrix-free through one interior solve.
    Eigen::VectorXd schur_apply(int k, const Eigen::VectorXd& v) const;

private:
    struct Patch {
        LocalSystem local;
        Eigen::VectorXd f_bar; // (gamma, interior, 0)
        std::unique_ptr<Factorization> saddle;
        std::unique_ptr<Factorization> interior;
        Eigen::MatrixXd psi_gamma, psi_interior, phi;
        Eigen::VectorXd scaling;
    };

    const DofMap* dofmap_;
    PrimalSet primal_;
    JumpOperator jump_;
    std::vector<Patch> patches_;
    Eigen::MatrixXd a_pi_, b_pi_;
    Eigen::VectorXd f_pi_;
    Eigen::LLT<Eigen::MatrixXd> a_pi_llt_;
};

IetiOperator build_ieti(const DofMap& dofmap, const Material& material, const ProblemData& data,
                        PrimalMode mode);

struct JumpStats {
    double max_all = 0.0;
    double max_corner = 0.0;
};
/// Coefficient jumps of a recovered field over all matched interface pairs.
JumpStats interface_jumps(const DofMap& dofmap, const PatchwiseField& field);

} // namespace iga
