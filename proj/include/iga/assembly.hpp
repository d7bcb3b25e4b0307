#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "iga/geometry.hpp"
#include "iga/linalg.hpp"

namespace iga {

/// Lame coefficients.
struct Material {
    double mu = 1.0;
    double lambda = 1.0;
};

using VectorField = std::function<Eigen::Vector2d(const Eigen::Vector2d&)>;
/// Traction data evaluated at a boundary point with its outward unit normal.
using TractionField = std::function<Eigen::Vector2d(const Eigen::Vector2d&, const Eigen::Vector2d&)>;
/// Gradient of a displacement field: row c holds the gradient of component c.
using MatrixField = std::function<Eigen::Matrix2d(const Eigen::Vector2d&)>;

/// Volumetric force plus Neumann data per tag; Dirichlet data is fixed to 0.
struct ProblemData {
    VectorField body_force;    // null means zero
    TractionField neumann;     // sides tagged neumann
    TractionField neumann_load; // sides tagged neumann_load

    static ProblemData zero() { return {}; }
    /// Downward surface force (0, -g0) on the load-tagged sides.
    static ProblemData end_load(double g0);
};

enum class DofClass { gamma, interior, eliminated };

/// Classification of the patch-local tensor-product DOFs into interface (gamma)
/// and interior sets, plus the conforming global numbering with matched
/// interface DOFs identified and Dirichlet DOFs eliminated.
class DofMap {
public:
    explicit DofMap(const MultiPatchDomain& domain);

    const MultiPatchDomain& domain() const { return *domain_; }
    int patch_count() const { return static_cast<int>(scalar_dims_.size()); }

    int scalar_count(int k) const { return scalar_dims_[k].first * scalar_dims_[k].second; }
    /// Local vector DOF id, components interleaved.
    static int local_dof(int scalar, int component) { return 2 * scalar + component; }

    DofClass dof_class(int k, int scalar) const { return classes_[k][scalar]; }
    int n_gamma(int k) const { return n_gamma_[k]; }
    int n_interior(int k) const { return n_interior_[k]; }
    /// Index within the gamma (interface) block; -1 for other classes.
    int gamma_index(int k, int scalar, int component) const;
    /// Index within the interior block; -1 for other classes.
    int interior_index(int k, int scalar, int component) const;

    int global_dim() const { return global_dim_; }
    /// Conforming global index; -1 for eliminated DOFs.
    int global_index(int k, int scalar, int component) const;

    /// Number of patches sharing the scalar basis function.
    int multiplicity(int k, int scalar) const;

    struct TracePair {
        int scalar_a, scalar_b;
        bool at_corner; // endpoint of the interface trace
    };
    /// Matched scalar pairs along an interface, ordered by the trace
    /// parameter on side_a.
    const std::vector<TracePair>& interface_pairs(int interface) const {
        return pairs_[interface];
    }

    /// Scalar index of the basis function at trace position t of a side.
    static int side_scalar(int nx, int ny, Side side, int t);
    /// Scalar index of the basis function interpolating a parameter corner.
    static int corner_scalar(int nx, int ny, int corner);

private:
    const MultiPatchDomain* domain_;
    std::vector<std::pair<int, int>> scalar_dims_;
    std::vector<std::vector<DofClass>> classes_;
    std::vector<std::vector<int>> class_index_; // per scalar: index of component 0 in its block
    std::vector<int> n_gamma_, n_interior_;
    std::vector<std::vector<int>> global_scalar_; // -1 if eliminated
    std::vector<std::vector<int>> scalar_multiplicity_;
    std::vector<std::vector<TracePair>> pairs_;
    int global_dim_ = 0;
};

/// Patch-local stiffness blocks in the (gamma, interior) splitting plus the
/// load parts. The full matrix is symmetric positive semidefinite.
struct LocalSystem {
    SparseMatrix a_gg, a_gi, a_ig, a_ii;
    Eigen::VectorXd f_gamma, f_interior;
};

LocalSystem assemble_local(const DofMap& dofmap, int k, const Material& material,
                           const ProblemData& data);

/// Conforming global stiffness matrix and load vector.
std::pair<SparseMatrix, Eigen::VectorXd> assemble_global(const DofMap& dofmap,
                                                         const Material& material,
                                                         const ProblemData& data);

/// H1-seminorm Gram matrix (vector Laplacian) on the conforming global space.
SparseMatrix assemble_grad_gram(const DofMap& dofmap);
/// Symmetric-gradient Gram matrix on the conforming global space.
SparseMatrix assemble_strain_gram(const DofMap& dofmap);

/// Patch-local Gram matrices in the plain tensor layout (2*scalar+component),
/// no boundary conditions applied.
SparseMatrix patch_strain_gram(const MultiPatchDomain& domain, int k);
SparseMatrix patch_grad_gram(const MultiPatchDomain& domain, int k);
/// Integrals of curl(phi_scalar e_component) over the patch, same layout.
Eigen::VectorXd patch_curl_functional(const MultiPatchDomain& domain, int k);

/// One coefficient vector per patch in the full tensor layout (2*scalar+c),
/// Dirichlet coefficients kept as zeros.
struct PatchwiseField {
    std::vector<Eigen::VectorXd> coeffs;
};

PatchwiseField zero_field(const DofMap& dofmap);
PatchwiseField field_from_global(const DofMap& dofmap, const Eigen::VectorXd& u);

Eigen::Vector2d eval_field(const MultiPatchDomain& domain, const PatchwiseField& field, int k,
                           double xh, double yh);
/// Physical gradient; row c holds the gradient of component c.
Eigen::Matrix2d eval_field_gradient(const MultiPatchDomain& domain, const PatchwiseField& field,
                                    int k, double xh, double yh);

/// Broken H1-seminorm distance between a discrete field and an exact gradient.
double h1_seminorm_error(const MultiPatchDomain& domain, const PatchwiseField& field,
                         const MatrixField& exact_gradient);
double h1_seminorm(const MultiPatchDomain& domain, const PatchwiseField& field);

/// Tensor-product Greville collocation of a smooth function, patch by patch.
PatchwiseField interpolate(const MultiPatchDomain& domain, const VectorField& u);

/// Assemble, factor and solve the monolithic conforming system.
PatchwiseField solve_monolithic(const DofMap& dofmap, const Material& material,
                                const ProblemData& data);

/// Manufactured solution with analytic derivatives; builds matching data.
struct ManufacturedSolution {
    VectorField value;
    MatrixField gradient;
    // second derivatives per component: (uxx, uxy, uyy)
    std::function<Eigen::Vector3d(const Eigen::Vector2d&)> second_u1;
    std::function<Eigen::Vector3d(const Eigen::Vector2d&)> second_u2;

    ProblemData data(const Material& material) const;
    static ManufacturedSolution trig();
};

} // namespace iga
