//! Analytic multi-fidelity benchmark families: the 8-D borehole flow-rate
//! function and the 10-D wing-weight function, each with their published
//! low-fidelity variants, plus a representative 1-D toy family with
//! piecewise-correlated low-fidelity sources.
//!
//! Variant 0 is always the high-fidelity source. Evaluations are pure and
//! noiseless; noise injection happens in the campaign loop.

use std::sync::Arc;

use crate::acquisition::Domain;
use crate::campaign::{MFProblem, Sense, Source};
use crate::error::BenchmarkError;
use crate::mathkit::{sobol_points, Rng64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Borehole,
    Wing,
    Toy1d,
}

impl Family {
    pub fn from_name(name: &str) -> Result<Family, BenchmarkError> {
        match name.to_ascii_lowercase().as_str() {
            "borehole" => Ok(Family::Borehole),
            "wing" => Ok(Family::Wing),
            "toy1d" => Ok(Family::Toy1d),
            other => Err(BenchmarkError::UnknownFamily(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Borehole => "borehole",
            Family::Wing => "wing",
            Family::Toy1d => "toy1d",
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            Family::Borehole => 8,
            Family::Wing => 10,
            Family::Toy1d => 1,
        }
    }

    pub fn num_sources(&self) -> usize {
        match self {
            Family::Borehole => 5,
            Family::Wing => 4,
            Family::Toy1d => 3,
        }
    }

    pub fn domain(&self) -> Vec<(f64, f64)> {
        match self {
            Family::Borehole => BOREHOLE_DOMAIN.to_vec(),
            Family::Wing => WING_DOMAIN.to_vec(),
            Family::Toy1d => vec![(0.0, 10.0)],
        }
    }

    pub fn eval(&self, variant: usize, x: &[f64]) -> Result<f64, BenchmarkError> {
        match self {
            Family::Borehole => eval_borehole(variant, x),
            Family::Wing => eval_wing(variant, x),
            Family::Toy1d => eval_toy1d(variant, x),
        }
    }

    pub fn default_budget(&self) -> f64 {
        match self {
            Family::Borehole | Family::Wing => 40_000.0,
            Family::Toy1d => 300.0,
        }
    }
}

/// One source of a benchmark family with its sampling cost, initial-design
/// size, and injected noise variance.
#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub family: Family,
    pub variant: usize,
    pub name: &'static str,
    pub cost: f64,
    pub n_init: usize,
    pub noise_var: f64,
}

/// Costs, initial sample counts and HF noise variances of each family.
pub fn source_specs(family: Family) -> Vec<SourceSpec> {
    let make = |variant, name, cost, n_init, noise_var| SourceSpec {
        family,
        variant,
        name,
        cost,
        n_init,
        noise_var,
    };
    match family {
        Family::Borehole => vec![
            make(0, "HF", 1000.0, 5, 16.0),
            make(1, "LF1", 100.0, 5, 0.0),
            make(2, "LF2", 10.0, 50, 0.0),
            make(3, "LF3", 100.0, 5, 0.0),
            make(4, "LF4", 10.0, 50, 0.0),
        ],
        Family::Wing => vec![
            make(0, "HF", 1000.0, 5, 9.0),
            make(1, "LF1", 100.0, 5, 0.0),
            make(2, "LF2", 10.0, 10, 0.0),
            make(3, "LF3", 1.0, 50, 0.0),
        ],
        Family::Toy1d => vec![
            make(0, "HF", 10.0, 5, 1.0),
            make(1, "LF1", 1.0, 10, 0.0),
            make(2, "LF2", 1.0, 10, 0.0),
        ],
    }
}

/// Standard borehole domain: r_w, r, T_u, H_u, T_l, H_l, L, K_w.
pub const BOREHOLE_DOMAIN: [(f64, f64); 8] = [
    (0.05, 0.15),
    (100.0, 50_000.0),
    (63_070.0, 115_600.0),
    (990.0, 1110.0),
    (63.1, 116.0),
    (700.0, 820.0),
    (1120.0, 1680.0),
    (9855.0, 12_045.0),
];

/// Standard wing-weight domain: S_w, W_fw, A, Lambda (deg), q, lambda, t_c,
/// N_z, W_dg, W_p. The dynamic pressure q is carried as an inactive tenth
/// dimension (the formulas do not use it).
pub const WING_DOMAIN: [(f64, f64); 10] = [
    (150.0, 200.0),
    (220.0, 300.0),
    (6.0, 10.0),
    (-10.0, 10.0),
    (16.0, 45.0),
    (0.5, 1.0),
    (0.08, 0.18),
    (2.5, 6.0),
    (1700.0, 2500.0),
    (0.025, 0.08),
];

fn check_domain(
    family: Family,
    x: &[f64],
    domain: &[(f64, f64)],
) -> Result<(), BenchmarkError> {
    if x.len() != domain.len() {
        return Err(BenchmarkError::DimensionMismatch {
            expected: domain.len(),
            got: x.len(),
        });
    }
    for (dim, (&value, &(lo, hi))) in x.iter().zip(domain).enumerate() {
        let slack = 1e-9 * (hi - lo);
        if !(value >= lo - slack && value <= hi + slack) || !value.is_finite() {
            return Err(BenchmarkError::OutOfDomain {
                dim,
                value,
                lo,
                hi,
            });
        }
    }
    let _ = family;
    Ok(())
}

/// Borehole water flow rate; variants 1..=4 are the published low-fidelity
/// approximations.
pub fn eval_borehole(variant: usize, x: &[f64]) -> Result<f64, BenchmarkError> {
    check_domain(Family::Borehole, x, &BOREHOLE_DOMAIN)?;
    let (rw, r, tu, hu, tl, hl, l, kw) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]);
    let log_r = (r / rw).ln();
    let flow_term = |c: f64| c * l * tu / (log_r * rw * rw * kw);
    let two_pi = 2.0 * std::f64::consts::PI;
    let value = match variant {
        0 => two_pi * tu * (hu - hl) / (log_r * (1.0 + flow_term(2.0) + tu / tl)),
        1 => two_pi * tu * (hu - 0.8 * hl) / (log_r * (1.0 + flow_term(1.0) + tu / tl)),
        2 => two_pi * tu * (hu - hl) / (log_r * (1.0 + flow_term(8.0) + 0.75 * tu / tl)),
        3 => {
            two_pi * tu * (1.09 * hu - hl)
                / ((4.0 * r / rw).ln() * (1.0 + flow_term(3.0) + tu / tl))
        }
        4 => {
            two_pi * tu * (1.05 * hu - hl)
                / ((2.0 * r / rw).ln() * (1.0 + flow_term(3.0) + tu / tl))
        }
        v => {
            return Err(BenchmarkError::UnknownVariant {
                family: "borehole".into(),
                variant: v,
            })
        }
    };
    Ok(value)
}

/// Wing weight; variants 1..=3 perturb the S_w exponent and the payload
/// term.
pub fn eval_wing(variant: usize, x: &[f64]) -> Result<f64, BenchmarkError> {
    check_domain(Family::Wing, x, &WING_DOMAIN)?;
    let (sw, wfw, aspect, lambda_deg, _q, taper, tc, nz, wdg, wp) =
        (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8], x[9]);
    let lambda = lambda_deg.to_radians();
    let cos_l = lambda.cos();
    let base = |sw_exp: f64| {
        0.036
            * sw.powf(sw_exp)
            * wfw.powf(0.0035)
            * (aspect / (cos_l * cos_l)).powf(0.6)
            * taper.powf(0.04)
            * (100.0 * tc / cos_l).powf(-0.3)
            * (nz * wdg).powf(0.49)
    };
    let value = match variant {
        0 => base(0.758) + sw * wp,
        1 => base(0.758) + wp,
        2 => base(0.8) + wp,
        3 => base(0.9),
        v => {
            return Err(BenchmarkError::UnknownVariant {
                family: "wing".into(),
                variant: v,
            })
        }
    };
    Ok(value)
}

/// Representative 1-D toy family on [0, 10]: a multimodal HF function with
/// two low-fidelity companions whose biases activate on opposite halves of
/// the domain, so each LF source is accurate only where the other is not.
pub fn eval_toy1d(variant: usize, x: &[f64]) -> Result<f64, BenchmarkError> {
    check_domain(Family::Toy1d, x, &[(0.0, 10.0)])?;
    let t = x[0];
    let hf = -1.5 * (-0.5 * (t - 7.5) * (t - 7.5)).exp()
        - 1.0 * (-2.0 * (t - 2.0) * (t - 2.0)).exp()
        + 0.2 * (3.0 * t).sin();
    let bias_high = 2.0 / (1.0 + (-2.0 * (t - 5.0)).exp());
    let bias_low = 2.0 / (1.0 + (-2.0 * (5.0 - t)).exp());
    match variant {
        0 => Ok(hf),
        1 => Ok(hf + bias_high),
        2 => Ok(hf + bias_low),
        v => Err(BenchmarkError::UnknownVariant {
            family: "toy1d".into(),
            variant: v,
        }),
    }
}

/// Root-mean-square error of an LF variant against the HF source over
/// Sobol-sampled domain points, normalized by the HF standard deviation.
pub fn rrmse(
    family: Family,
    lf_variant: usize,
    n_points: usize,
    seed: u64,
) -> Result<f64, BenchmarkError> {
    let domain = family.domain();
    let dims = domain.len();
    let skip = 1 + Rng64::from_key(&[seed, 0x44]).next_u64() % 65_536;
    let points = sobol_points(dims, n_points, skip).expect("benchmark dims within Sobol table");
    let mut hf_values = Vec::with_capacity(n_points);
    let mut sq_err = 0.0;
    for unit in &points {
        let x: Vec<f64> = unit
            .iter()
            .zip(&domain)
            .map(|(&u, &(lo, hi))| lo + u * (hi - lo))
            .collect();
        let hf = family.eval(0, &x)?;
        let lf = family.eval(lf_variant, &x)?;
        sq_err += (lf - hf) * (lf - hf);
        hf_values.push(hf);
    }
    let n = n_points as f64;
    let mean = hf_values.iter().sum::<f64>() / n;
    let var = hf_values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((sq_err / n).sqrt() / var.sqrt())
}

/// Assemble the multi-fidelity problem of a family with its published
/// costs, noise variances, and minimization sense, plus the default
/// initial-design counts and budget.
pub fn make_problem(family: Family) -> (MFProblem, Vec<usize>, f64) {
    let specs = source_specs(family);
    let sources: Vec<Source> = specs
        .iter()
        .map(|spec| {
            let variant = spec.variant;
            Source {
                name: spec.name.to_string(),
                cost: spec.cost,
                noise_var: spec.noise_var,
                eval: Arc::new(move |u: &crate::emulator::MixedInput| {
                    family
                        .eval(variant, &u.continuous)
                        .map_err(|e| e.to_string())
                }),
            }
        })
        .collect();
    let problem = MFProblem {
        sources,
        hf_index: 0,
        domain: Domain::continuous(&family.domain()),
        sense: Sense::Minimize,
    };
    let n_init = specs.iter().map(|s| s.n_init).collect();
    (problem, n_init, family.default_budget())
}
