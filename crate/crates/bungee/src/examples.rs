//! Built-in example semigroups with canonical viewports, raster
//! configurations, and identity checks.

use crate::expr::Expr;
use crate::grid::Viewport;
use crate::orbit::{OrbitConfig, OrbitError, Semigroup};
use crate::verify::{
    check_class_agreement, check_forward_invariance, check_partition, AgreementReport,
    PropertyVerdict, SampleSet,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub const BUILTIN_NAMES: [&str; 3] = ["reciprocal-square", "exp-semigroup", "exp-pair"];

/// One named example: the semigroup plus everything needed to reproduce
/// its canonical artifacts.
#[derive(Debug, Clone)]
pub struct Builtin {
    pub name: String,
    pub semigroup: Semigroup,
    /// Single-generator reference semigroup whose classification the
    /// example's identity check compares against, when one exists.
    pub reference: Option<Semigroup>,
    pub config: OrbitConfig,
    /// Canonical full-view render.
    pub render_viewport: Viewport,
    /// Raster tuned so the class boundary is pixel-visible near the
    /// known repelling fixed point, with its own thresholds. For the
    /// exponential pairs the boundary raster runs on the reference map,
    /// whose Julia set the examples share.
    pub boundary_semigroup: Semigroup,
    pub boundary_viewport: Viewport,
    pub boundary_config: OrbitConfig,
    /// Region searched for fixed points of short words.
    pub fixed_point_region: Viewport,
    /// Rectangle sampled for the verification suite.
    pub sample_rect: (f64, f64, f64, f64),
    /// Generators commute exactly in exact arithmetic; the numerical
    /// commutation check may still report a tiny residual.
    pub known_abelian: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExampleVerdicts {
    pub partition: PropertyVerdict,
    pub forward_invariance: PropertyVerdict,
    pub reference_agreement: Option<AgreementReport>,
}

impl Builtin {
    pub fn by_name(name: &str, lambda: f64, order: u32) -> Result<Builtin, OrbitError> {
        match name {
            "reciprocal-square" => Ok(reciprocal_square()),
            "exp-semigroup" => exp_semigroup(lambda, order),
            "exp-pair" => exp_pair(lambda, order),
            _ => Err(OrbitError::InvalidConfig(format!(
                "unknown builtin `{name}` (expected one of: {})",
                BUILTIN_NAMES.join(", ")
            ))),
        }
    }

    /// Seeded canonical checks: partition exclusivity, forward
    /// invariance, and (when a reference exists) class agreement with
    /// the single-generator reference.
    pub fn canonical_verdicts(&self, samples: usize, seed: u64) -> ExampleVerdicts {
        let (xmin, ymin, xmax, ymax) = self.sample_rect;
        let s = SampleSet::rectangle(&self.semigroup, xmin, ymin, xmax, ymax, samples, seed);
        let partition = check_partition(&self.semigroup, &s, &self.config);
        let forward_invariance = check_forward_invariance(&self.semigroup, &s, &self.config);
        let reference_agreement = self
            .reference
            .as_ref()
            .map(|r| check_class_agreement(&self.semigroup, r, &s, &self.config));
        ExampleVerdicts { partition, forward_invariance, reference_agreement }
    }
}

/// The rational map 1/z²: bungee off the unit circle, bounded on it.
pub fn reciprocal_square() -> Builtin {
    let mut boundary_config = OrbitConfig::default();
    // A low overflow cap and shallow depth keep the thin bounded ring at
    // |z| = 1 wider than a pixel: orbits must cross the cap within the
    // configured depth to register escape.
    boundary_config.overflow_cap = 1e4;
    boundary_config.escape_radius = 9e3;
    boundary_config.max_depth = 10;
    boundary_config.growth_streak = 10;
    let semigroup = Semigroup::from_sources(&["1/z^2"]).expect("builtin");
    Builtin {
        name: "reciprocal-square".into(),
        boundary_semigroup: semigroup.clone(),
        semigroup,
        reference: None,
        config: OrbitConfig::default(),
        render_viewport: Viewport::from_bounds(-2.0, -2.0, 2.0, 2.0, 256, 256),
        boundary_viewport: Viewport::from_bounds(-2.0, -2.0, 2.0, 2.0, 512, 512),
        boundary_config,
        fixed_point_region: Viewport::from_bounds(0.25, -1.0, 2.0, 1.0, 1, 1),
        sample_rect: (-2.0, -2.0, 2.0, 2.0),
        known_abelian: true,
    }
}

fn lambda_expr(lambda: f64) -> Expr {
    // λ·z with the multiplication folded away for λ = 1.
    Expr::mul(Expr::real(lambda), Expr::Var)
}

/// f = e^{λz} together with g = f^{∘p} + 2πi/λ (p-th iterate plus the
/// period offset); the filled set of the pair coincides with K(f).
pub fn exp_semigroup(lambda: f64, p: u32) -> Result<Builtin, OrbitError> {
    if lambda == 0.0 || !lambda.is_finite() || p == 0 || p > 3 {
        return Err(OrbitError::InvalidConfig(
            "exp-semigroup needs finite lambda != 0 and 1 <= p <= 3".into(),
        ));
    }
    let f = Expr::exp(lambda_expr(lambda));
    let mut iterate = f.clone();
    for _ in 1..p {
        iterate = f.substitute(&iterate);
    }
    let g = Expr::add(iterate, Expr::constant(0.0, TAU / lambda));
    let semigroup = Semigroup::new(vec![(f.print(), f.clone()), (g.print(), g)])?;
    let reference = Semigroup::new(vec![(f.print(), f)])?;
    Ok(Builtin {
        name: "exp-semigroup".into(),
        semigroup,
        boundary_semigroup: reference.clone(),
        reference: Some(reference),
        config: OrbitConfig::default(),
        render_viewport: Viewport::from_bounds(-3.0, -3.0, 3.0, 3.0, 256, 256),
        boundary_viewport: exp_boundary_viewport(),
        boundary_config: OrbitConfig::default(),
        fixed_point_region: Viewport::from_bounds(-1.0, 0.0, 3.0, 3.0, 1, 1),
        sample_rect: (-3.0, -3.0, 3.0, 3.0),
        known_abelian: false,
    })
}

/// h₁ = e^{λz} together with h₂ = h₁^{∘q} + 2πi/λ (q-th iterate plus
/// the period offset); the bungee sets of the pair and of h₁ coincide.
/// The power map e^{qλz} + 2πi/λ does not share this identity: its word
/// tree holds bounded branches that h₁ alone never produces.
pub fn exp_pair(lambda: f64, q: u32) -> Result<Builtin, OrbitError> {
    if lambda == 0.0 || !lambda.is_finite() || q == 0 || q > 4 {
        return Err(OrbitError::InvalidConfig(
            "exp-pair needs finite lambda != 0 and 1 <= q <= 4".into(),
        ));
    }
    let h1 = Expr::exp(lambda_expr(lambda));
    let mut iterate = h1.clone();
    for _ in 1..q {
        iterate = h1.substitute(&iterate);
    }
    let h2 = Expr::add(iterate, Expr::constant(0.0, TAU / lambda));
    let semigroup = Semigroup::new(vec![(h1.print(), h1.clone()), (h2.print(), h2)])?;
    let reference = Semigroup::new(vec![(h1.print(), h1)])?;
    Ok(Builtin {
        name: "exp-pair".into(),
        semigroup,
        boundary_semigroup: reference.clone(),
        reference: Some(reference),
        config: OrbitConfig::default(),
        // The genuinely branching pair is the most expensive builtin;
        // the canonical render stays coarse.
        render_viewport: Viewport::from_bounds(-3.0, -3.0, 3.0, 3.0, 128, 128),
        boundary_viewport: exp_boundary_viewport(),
        boundary_config: OrbitConfig::default(),
        fixed_point_region: Viewport::from_bounds(-1.0, 0.0, 3.0, 3.0, 1, 1),
        sample_rect: (-3.0, -3.0, 3.0, 3.0),
        known_abelian: false,
    })
}

/// Local window around the repelling fixed point of e^z at
/// 0.318131 + 1.337236i, sized so the bounded plateau spans only a few
/// cells.
fn exp_boundary_viewport() -> Viewport {
    let (cx, cy) = (0.318131, 1.337236);
    let half = 0.25;
    Viewport::from_bounds(cx - half, cy - half, cx + half, cy + half, 512, 512)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::ExtComplex;
    use crate::complex::DEFAULT_CAP;

    #[test]
    fn builtin_names_resolve() {
        for name in BUILTIN_NAMES {
            assert!(Builtin::by_name(name, 1.0, 1).is_ok(), "{name}");
        }
        assert!(Builtin::by_name("unknown", 1.0, 1).is_err());
    }

    #[test]
    fn exp_semigroup_iterate_order() {
        // p = 2: the second generator is f(f(z)) + 2πi.
        let b = exp_semigroup(1.0, 2).unwrap();
        let g = &b.semigroup.generators()[1];
        let z = ExtComplex::finite(0.25, 0.1);
        let f1 = (0.25f64).exp() * f64::cos(0.1);
        let f1i = (0.25f64).exp() * f64::sin(0.1);
        let f2r = f1.exp() * f1i.cos();
        let f2i = f1.exp() * f1i.sin();
        let v = g.eval(z, DEFAULT_CAP).unwrap();
        assert!((v.re().unwrap() - f2r).abs() < 1e-12);
        assert!((v.im().unwrap() - (f2i + TAU)).abs() < 1e-12);
    }

    #[test]
    fn exp_pair_iterate_order() {
        // q = 2: the second generator is e^{e^z} + 2πi.
        let b = exp_pair(1.0, 2).unwrap();
        let g = &b.semigroup.generators()[1];
        let z = ExtComplex::finite(0.5, 0.0);
        let v = g.eval(z, DEFAULT_CAP).unwrap();
        let expect = 0.5f64.exp().exp();
        assert!((v.re().unwrap() - expect).abs() < 1e-10);
        assert!((v.im().unwrap() - TAU).abs() < 1e-12);
    }

    #[test]
    fn lambda_scales_offset() {
        let b = exp_pair(2.0, 1).unwrap();
        let g = &b.semigroup.generators()[1];
        let v = g.eval(ExtComplex::ZERO, DEFAULT_CAP).unwrap();
        assert!((v.re().unwrap() - 1.0).abs() < 1e-12);
        assert!((v.im().unwrap() - TAU / 2.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(exp_semigroup(0.0, 1).is_err());
        assert!(exp_semigroup(1.0, 0).is_err());
        assert!(exp_pair(f64::NAN, 1).is_err());
    }

    #[test]
    fn reciprocal_square_boundary_config_sane() {
        let b = reciprocal_square();
        assert!(b.boundary_config.validate().is_ok());
        assert!(b.boundary_config.overflow_cap < OrbitConfig::default().overflow_cap);
    }

    #[test]
    fn canonical_verdicts_pass_for_reciprocal_square() {
        let b = reciprocal_square();
        let v = b.canonical_verdicts(60, 41);
        assert!(v.partition.pass);
        assert!(v.forward_invariance.pass, "{:?}", v.forward_invariance.exemplars);
        assert!(v.reference_agreement.is_none());
    }
}
