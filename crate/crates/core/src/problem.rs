//! Uniform access to the three formulations.

use crate::advection::AdvectionProblem;
use crate::assembly::{
    assemble_ls, default_assembly_order, default_error_order, fd_jet, ls_error, ls_functional, LeastSquaresForm,
};
use crate::elliptic::EllipticProblem;
use crate::error::Result;
use crate::expr::{Expr, Point};
use crate::mesh::{BoundaryFacet, SecondAxis, StructuredMesh2D};
use crate::quad_basis::{gauss_rule, FeFunction, FeSpace};
use crate::solver::{factor_solve, min_gen_eig, EigOptions, EigResult, SpdFactor, SymMatrix};
use crate::wave::WaveProblem;

/// Gauss points of the given order on every cell.
pub fn sample_cell_points(mesh: &StructuredMesh2D, order: usize) -> Result<Vec<Point>> {
    let rule = gauss_rule(order, 2)?;
    let mut out = Vec::with_capacity(mesh.n_cells() * rule.len());
    for c in 0..mesh.n_cells() {
        for p in &rule.points {
            out.push(mesh.point(mesh.map(c, *p)));
        }
    }
    Ok(out)
}

/// Gauss points of the given order on the listed facets.
pub fn sample_facet_points(mesh: &StructuredMesh2D, facets: &[BoundaryFacet], order: usize) -> Result<Vec<Point>> {
    let rule = gauss_rule(order, 1)?;
    Ok(facets
        .iter()
        .flat_map(|f| rule.points.iter().map(move |p| mesh.point(f.at(p[0]))))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Advection,
    Elliptic,
    Wave,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Advection => "advection",
            ProblemKind::Elliptic => "elliptic",
            ProblemKind::Wave => "wave",
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "advection" => Ok(ProblemKind::Advection),
            "elliptic" => Ok(ProblemKind::Elliptic),
            "wave" => Ok(ProblemKind::Wave),
            _ => Err(format!("unknown problem `{s}` (expected advection, elliptic or wave)")),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Problem {
    Advection(AdvectionProblem),
    Elliptic(EllipticProblem),
    Wave(WaveProblem),
}

/// Assembled normal equations together with the solution-norm Gram matrix.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub operator: SymMatrix,
    pub rhs: Vec<f64>,
    pub v_gram: SymMatrix,
    /// `‖l‖²` realized by quadrature.
    pub data_norm_sq: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub field: FeFunction,
    pub dofs: usize,
    pub residual_dual_norm: f64,
    pub v_norm: f64,
    pub l_dual_norm: f64,
}

impl Solution {
    /// `‖u_h‖_V ≤ C‖l‖` with slack 1.
    pub fn stability_ok(&self, constant: f64) -> bool {
        self.v_norm <= constant * self.l_dual_norm
    }
}

impl Problem {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Problem::Advection(_) => ProblemKind::Advection,
            Problem::Elliptic(_) => ProblemKind::Elliptic,
            Problem::Wave(_) => ProblemKind::Wave,
        }
    }

    pub fn mesh(&self) -> &StructuredMesh2D {
        match self {
            Problem::Advection(p) => &p.mesh,
            Problem::Elliptic(p) => &p.mesh,
            Problem::Wave(p) => &p.mesh,
        }
    }

    pub fn n_components(&self) -> usize {
        match self {
            Problem::Advection(_) => 1,
            Problem::Elliptic(_) => 3,
            Problem::Wave(_) => 2,
        }
    }

    pub fn space(&self, degree: usize) -> Result<FeSpace> {
        FeSpace::new(self.mesh().clone(), degree, self.n_components())
    }

    pub fn residual_form(&self) -> &dyn LeastSquaresForm {
        match self {
            Problem::Advection(p) => p,
            Problem::Elliptic(p) => p,
            Problem::Wave(p) => p,
        }
    }

    pub fn v_form(&self) -> Box<dyn LeastSquaresForm + '_> {
        match self {
            Problem::Advection(p) => Box::new(p.v_form()),
            Problem::Elliptic(p) => Box::new(p.v_form()),
            Problem::Wave(p) => Box::new(p.v_form()),
        }
    }

    /// Lower bound on the inf-sup constant proved for this formulation.
    pub fn theory_bound(&self) -> f64 {
        match self {
            Problem::Advection(_) => 0.5,
            Problem::Elliptic(p) => p.infsup_bound(),
            Problem::Wave(p) => p.infsup_bound(),
        }
    }

    /// `C` in `‖u‖_V ≤ C‖l‖`.
    pub fn stability_constant(&self) -> f64 {
        1.0 / self.theory_bound()
    }

    pub fn time_axis(&self) -> bool {
        self.mesh().second_axis == SecondAxis::Time
    }

    pub fn assemble(&self, space: &FeSpace, order: usize) -> Result<AssembledSystem> {
        let r = assemble_ls(space, self.residual_form(), order)?;
        let v = assemble_ls(space, self.v_form().as_ref(), order)?;
        Ok(AssembledSystem {
            operator: r.matrix,
            rhs: r.rhs,
            v_gram: v.matrix,
            data_norm_sq: r.data_norm_sq,
        })
    }

    pub fn solve(&self, space: &FeSpace, order: Option<usize>, tol: f64) -> Result<Solution> {
        let order = order.unwrap_or_else(|| default_assembly_order(space));
        let sys = self.assemble(space, order)?;
        let f = SpdFactor::new(&sys.operator)?;
        let x = factor_solve(&sys.operator, &f, &sys.rhs, tol)?;
        let field = FeFunction::new(space.clone(), x);
        let residual = ls_functional(self.residual_form(), &field, order)?;
        let v = ls_functional(self.v_form().as_ref(), &field, order)?;
        Ok(Solution {
            dofs: space.n_dofs(),
            field,
            residual_dual_norm: residual.max(0.0).sqrt(),
            v_norm: v.max(0.0).sqrt(),
            l_dual_norm: sys.data_norm_sq.sqrt(),
        })
    }

    /// `α_h² = min xᵀBx / xᵀM_V x`, with B the data-free residual form.
    pub fn infsup(&self, space: &FeSpace, order: Option<usize>, opts: EigOptions) -> Result<EigResult> {
        let order = order.unwrap_or_else(|| default_assembly_order(space));
        let sys = self.assemble(space, order)?;
        min_gen_eig(&sys.operator, &sys.v_gram, opts)
    }

    /// V-norm and L² errors against an exact solution given per component.
    pub fn errors(&self, u: &FeFunction, exact: &[Expr], order: Option<usize>) -> Result<(f64, f64)> {
        let order = order.unwrap_or_else(|| default_error_order(&u.space));
        let nc = self.n_components();
        let time = self.time_axis();
        let jet = |x: Point, out: &mut [f64]| {
            fd_jet(
                |p, v| {
                    for (c, e) in exact.iter().enumerate().take(nc) {
                        v[c] = e.eval(p)?;
                    }
                    Ok(())
                },
                x,
                time,
                nc,
                out,
            )
        };
        let v = ls_error(self.v_form().as_ref(), u, order, jet, false)?;
        let l2 = crate::assembly::integrate_cells(&u.space, &[u], order, |q| {
            let mut s = 0.0;
            for (c, e) in exact.iter().enumerate().take(nc) {
                s += (q.jets[0][3 * c] - e.eval(q.x)?).powi(2);
            }
            Ok(s)
        })?;
        Ok((l2.sqrt(), v.max(0.0).sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advection::AdvectionParams;
    use crate::expr::parse;
    use crate::mesh::{build_mesh, Rect};

    fn advection(n: usize, rho: &str) -> Problem {
        let p = AdvectionParams::new(
            [parse("1").unwrap(), parse("0").unwrap()],
            parse(rho).unwrap(),
            parse("0").unwrap(),
            parse("sin(pi*y)").unwrap(),
        );
        Problem::Advection(AdvectionProblem::new(build_mesh(n, n, Rect::unit()).unwrap(), p, 4).unwrap())
    }

    #[test]
    fn advection_infsup_is_one_for_unit_reaction() {
        // With ρ = 1 and β = (1, 0), R₀(u) = ‖u‖²_W + ∫_{Γ₊}u², so λ_min = 1.
        let p = advection(4, "1");
        let s = p.space(1).unwrap();
        let r = p.infsup(&s, None, EigOptions::default()).unwrap();
        assert!((r.lambda_min - 1.0).abs() < 1e-8, "{}", r.lambda_min);
    }

    #[test]
    fn stability_and_error_of_manufactured_advection() {
        let p = advection(16, "1");
        let s = p.space(2).unwrap();
        let sol = p.solve(&s, None, 1e-10).unwrap();
        assert!(sol.stability_ok(p.stability_constant()));
        assert!((sol.l_dual_norm - 0.5f64.sqrt()).abs() < 1e-10);
        assert!((sol.v_norm - 0.65752).abs() < 1e-3);
        let (l2, v) = p
            .errors(&sol.field, &[parse("exp(-x)*sin(pi*y)").unwrap()], None)
            .unwrap();
        assert!(l2 < 1e-3 && v < 1e-2, "{l2} {v}");
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("wave".parse::<ProblemKind>().unwrap(), ProblemKind::Wave);
        assert!("heat".parse::<ProblemKind>().is_err());
    }
}
