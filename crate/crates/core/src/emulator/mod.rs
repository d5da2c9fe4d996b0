//! Latent-map Gaussian process emulation over mixed continuous/categorical
//! inputs fused from multiple data sources.
//!
//! Categorical variables (including the source indicator that augments every
//! sample) are encoded as grouped one-hot prior vectors and mapped through
//! learned matrices into a 2-D latent manifold; latent distances enter the
//! Gaussian kernel next to the weighted continuous distances. Each source
//! carries its own nugget, so the model learns a separate noise process per
//! source.

pub mod dataset;
mod fit;
mod objective;
mod predict;
mod score;

pub use fit::{fit, fit_with_options, EmulatorConfig, FitOptions, Scaling};
pub use objective::{neg_log_posterior, parameter_count, penalized_objective, DeltaMode, PenaltyData};
pub use predict::TrainedEmulator;
pub use score::{interval_score, Prediction};

use crate::error::EmulatorError;
use crate::mathkit::kernel::pow10;
use crate::mathkit::SquareMat;

/// Dimensionality of each learned latent manifold.
pub const LATENT_DIM: usize = 2;

/// Shape of the input space an emulator is trained over.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSpace {
    /// Number of continuous coordinates (dx).
    pub continuous_dims: usize,
    /// Cardinality of each design categorical variable (dt entries).
    pub categorical_cardinalities: Vec<usize>,
    /// Number of data sources (ds); the source indicator is a categorical
    /// variable of this cardinality added on top of the design variables.
    pub num_sources: usize,
}

impl InputSpace {
    pub fn new(
        continuous_dims: usize,
        categorical_cardinalities: Vec<usize>,
        num_sources: usize,
    ) -> Result<Self, EmulatorError> {
        if num_sources == 0 {
            return Err(EmulatorError::InvalidConfig(
                "a problem needs at least one source".into(),
            ));
        }
        if continuous_dims + categorical_cardinalities.len() == 0 {
            return Err(EmulatorError::InvalidConfig(
                "input space needs at least one variable".into(),
            ));
        }
        if categorical_cardinalities.iter().any(|&l| l == 0) {
            return Err(EmulatorError::InvalidConfig(
                "categorical variables need at least one level".into(),
            ));
        }
        Ok(InputSpace {
            continuous_dims,
            categorical_cardinalities,
            num_sources,
        })
    }

    /// Total number of design categorical levels (sum of cardinalities).
    pub fn total_levels(&self) -> usize {
        self.categorical_cardinalities.iter().sum()
    }

    /// Latent dimensionality of the concatenated manifolds.
    pub fn latent_width(&self) -> usize {
        if self.categorical_cardinalities.is_empty() {
            LATENT_DIM
        } else {
            2 * LATENT_DIM
        }
    }
}

/// A design point: continuous coordinates plus categorical level indices.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedInput {
    pub continuous: Vec<f64>,
    pub categorical: Vec<usize>,
}

impl MixedInput {
    pub fn continuous(values: Vec<f64>) -> Self {
        MixedInput {
            continuous: values,
            categorical: Vec::new(),
        }
    }
}

/// A design point tagged with the index of the source that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedInput {
    pub point: MixedInput,
    /// Zero-based index into the problem's source list.
    pub source: usize,
}

/// A learned linear map from grouped one-hot priors to the latent manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMap {
    rows: usize,
    data: Vec<f64>,
}

impl LatentMap {
    pub fn zeros(rows: usize) -> Self {
        LatentMap {
            rows,
            data: vec![0.0; rows * LATENT_DIM],
        }
    }

    pub fn from_rows(data: Vec<f64>) -> Result<Self, EmulatorError> {
        if data.len() % LATENT_DIM != 0 {
            return Err(EmulatorError::DimensionMismatch {
                expected: LATENT_DIM,
                got: data.len(),
            });
        }
        Ok(LatentMap {
            rows: data.len() / LATENT_DIM,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * LATENT_DIM..(i + 1) * LATENT_DIM]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Everything the MAP objective estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    /// Constant process mean.
    pub beta: f64,
    /// Process variance, strictly positive.
    pub sigma2: f64,
    /// Base-10 kernel scale exponents, one per continuous dimension.
    pub omega: Vec<f64>,
    /// Latent map of the source-indicator variable (ds rows).
    pub a_fidelity: LatentMap,
    /// Latent map shared by the design categorical variables (sum-of-levels
    /// rows); present iff the space has categorical variables.
    pub a_design: Option<LatentMap>,
    /// Per-source nuggets, each non-negative.
    pub delta: Vec<f64>,
}

/// Grouped one-hot encoding of categorical levels: one 1 per variable block.
pub fn encode_prior(levels: &[usize], cardinalities: &[usize]) -> Result<Vec<f64>, EmulatorError> {
    if levels.len() != cardinalities.len() {
        return Err(EmulatorError::DimensionMismatch {
            expected: cardinalities.len(),
            got: levels.len(),
        });
    }
    let total: usize = cardinalities.iter().sum();
    let mut zeta = vec![0.0; total];
    let mut offset = 0;
    for (variable, (&level, &cardinality)) in levels.iter().zip(cardinalities).enumerate() {
        if level >= cardinality {
            return Err(EmulatorError::LevelOutOfRange {
                variable,
                level,
                cardinality,
            });
        }
        zeta[offset + level] = 1.0;
        offset += cardinality;
    }
    Ok(zeta)
}

/// Map a prior vector into the latent manifold: z = zeta * A.
pub fn latent_position(zeta: &[f64], map: &LatentMap) -> Result<[f64; LATENT_DIM], EmulatorError> {
    if zeta.len() != map.rows() {
        return Err(EmulatorError::DimensionMismatch {
            expected: map.rows(),
            got: zeta.len(),
        });
    }
    let mut z = [0.0; LATENT_DIM];
    for (i, &weight) in zeta.iter().enumerate() {
        if weight != 0.0 {
            let row = map.row(i);
            for (zk, rk) in z.iter_mut().zip(row) {
                *zk += weight * rk;
            }
        }
    }
    Ok(z)
}

/// Kernel correlation between two augmented inputs under `hyper`:
/// exp(-sum_i 10^{omega_i} (x_i-x'_i)^2 - sum_i (z_i-z'_i)^2), where z
/// concatenates the fidelity-manifold position and (when design categorical
/// variables exist) the design-manifold position.
pub fn correlation(
    u: &AugmentedInput,
    u_prime: &AugmentedInput,
    hyper: &Hyperparameters,
    space: &InputSpace,
) -> Result<f64, EmulatorError> {
    let a = prepare_inputs(std::slice::from_ref(u), hyper, space)?;
    let b = prepare_inputs(std::slice::from_ref(u_prime), hyper, space)?;
    Ok(kernel_cross(&a, 0, &b, 0))
}

/// Assemble the nugget-augmented correlation matrix R_delta = R + N_delta:
/// unit diagonal plus the per-source nugget of each row's source.
pub fn assemble_r_delta(
    inputs: &[AugmentedInput],
    hyper: &Hyperparameters,
    space: &InputSpace,
) -> Result<SquareMat, EmulatorError> {
    let prepared = prepare_inputs(inputs, hyper, space)?;
    Ok(assemble_from_prepared(&prepared, inputs, &hyper.delta))
}

pub(crate) fn assemble_from_prepared(
    prepared: &Prepared,
    inputs: &[AugmentedInput],
    delta: &[f64],
) -> SquareMat {
    let n = prepared.n;
    let mut m = SquareMat::zeros(n);
    for i in 0..n {
        for j in 0..i {
            let k = kernel_cross(prepared, i, prepared, j);
            m.set(i, j, k);
            m.set(j, i, k);
        }
        m.set(i, i, 1.0 + delta[inputs[i].source]);
    }
    m
}

/// Inputs flattened for fast kernel evaluation: continuous rows weighted by
/// 10^omega are compared with plain squared distance on latent rows.
pub(crate) struct Prepared {
    pub n: usize,
    dx: usize,
    zdim: usize,
    x: Vec<f64>,
    z: Vec<f64>,
    weights: Vec<f64>,
}

pub(crate) fn prepare_inputs(
    inputs: &[AugmentedInput],
    hyper: &Hyperparameters,
    space: &InputSpace,
) -> Result<Prepared, EmulatorError> {
    let dx = space.continuous_dims;
    let dt = space.categorical_cardinalities.len();
    if hyper.omega.len() != dx {
        return Err(EmulatorError::DimensionMismatch {
            expected: dx,
            got: hyper.omega.len(),
        });
    }
    if hyper.a_fidelity.rows() != space.num_sources {
        return Err(EmulatorError::DimensionMismatch {
            expected: space.num_sources,
            got: hyper.a_fidelity.rows(),
        });
    }
    if dt > 0 {
        let map = hyper.a_design.as_ref().ok_or_else(|| {
            EmulatorError::InvalidConfig("design categorical variables need a_design".into())
        })?;
        if map.rows() != space.total_levels() {
            return Err(EmulatorError::DimensionMismatch {
                expected: space.total_levels(),
                got: map.rows(),
            });
        }
    }

    let zdim = space.latent_width();
    let n = inputs.len();
    let mut x = vec![0.0; n * dx];
    let mut z = vec![0.0; n * zdim];
    for (row, input) in inputs.iter().enumerate() {
        if input.point.continuous.len() != dx {
            return Err(EmulatorError::DimensionMismatch {
                expected: dx,
                got: input.point.continuous.len(),
            });
        }
        if input.point.categorical.len() != dt {
            return Err(EmulatorError::DimensionMismatch {
                expected: dt,
                got: input.point.categorical.len(),
            });
        }
        if input.source >= space.num_sources {
            return Err(EmulatorError::SourceOutOfRange {
                index: input.source,
                num_sources: space.num_sources,
            });
        }
        x[row * dx..(row + 1) * dx].copy_from_slice(&input.point.continuous);
        let zrow = &mut z[row * zdim..(row + 1) * zdim];
        zrow[..LATENT_DIM].copy_from_slice(hyper.a_fidelity.row(input.source));
        if dt > 0 {
            let map = hyper.a_design.as_ref().unwrap();
            let mut offset = 0;
            for (variable, (&level, &cardinality)) in input
                .point
                .categorical
                .iter()
                .zip(&space.categorical_cardinalities)
                .enumerate()
            {
                if level >= cardinality {
                    return Err(EmulatorError::LevelOutOfRange {
                        variable,
                        level,
                        cardinality,
                    });
                }
                let src = map.row(offset + level);
                for (zk, rk) in zrow[LATENT_DIM..].iter_mut().zip(src) {
                    *zk += rk;
                }
                offset += cardinality;
            }
        }
    }
    let weights = hyper.omega.iter().map(|&w| pow10(w)).collect();
    Ok(Prepared {
        n,
        dx,
        zdim,
        x,
        z,
        weights,
    })
}

/// Kernel between row `i` of `a` and row `j` of `b`.
#[inline]
pub(crate) fn kernel_cross(a: &Prepared, i: usize, b: &Prepared, j: usize) -> f64 {
    debug_assert_eq!(a.dx, b.dx);
    debug_assert_eq!(a.zdim, b.zdim);
    let mut dist = 0.0;
    let xi = &a.x[i * a.dx..(i + 1) * a.dx];
    let xj = &b.x[j * b.dx..(j + 1) * b.dx];
    for ((ai, bj), w) in xi.iter().zip(xj).zip(&a.weights) {
        let d = ai - bj;
        dist += w * d * d;
    }
    let zi = &a.z[i * a.zdim..(i + 1) * a.zdim];
    let zj = &b.z[j * b.zdim..(j + 1) * b.zdim];
    for (ai, bj) in zi.iter().zip(zj) {
        let d = ai - bj;
        dist += d * d;
    }
    (-dist).exp()
}

/// A training set: augmented inputs with scalar outputs over a given space.
#[derive(Debug, Clone)]
pub struct TrainingData {
    space: InputSpace,
    inputs: Vec<AugmentedInput>,
    outputs: Vec<f64>,
}

impl TrainingData {
    pub fn new(
        space: InputSpace,
        inputs: Vec<AugmentedInput>,
        outputs: Vec<f64>,
    ) -> Result<Self, EmulatorError> {
        if inputs.len() != outputs.len() {
            return Err(EmulatorError::LengthMismatch {
                inputs: inputs.len(),
                outputs: outputs.len(),
            });
        }
        let data = TrainingData {
            space,
            inputs,
            outputs,
        };
        data.validate()?;
        Ok(data)
    }

    fn validate(&self) -> Result<(), EmulatorError> {
        for input in &self.inputs {
            if input.point.continuous.len() != self.space.continuous_dims {
                return Err(EmulatorError::DimensionMismatch {
                    expected: self.space.continuous_dims,
                    got: input.point.continuous.len(),
                });
            }
            if input.point.categorical.len() != self.space.categorical_cardinalities.len() {
                return Err(EmulatorError::DimensionMismatch {
                    expected: self.space.categorical_cardinalities.len(),
                    got: input.point.categorical.len(),
                });
            }
            if input.source >= self.space.num_sources {
                return Err(EmulatorError::SourceOutOfRange {
                    index: input.source,
                    num_sources: self.space.num_sources,
                });
            }
        }
        Ok(())
    }

    pub fn push(&mut self, input: AugmentedInput, output: f64) -> Result<(), EmulatorError> {
        if input.point.continuous.len() != self.space.continuous_dims
            || input.point.categorical.len() != self.space.categorical_cardinalities.len()
        {
            return Err(EmulatorError::DimensionMismatch {
                expected: self.space.continuous_dims,
                got: input.point.continuous.len(),
            });
        }
        if input.source >= self.space.num_sources {
            return Err(EmulatorError::SourceOutOfRange {
                index: input.source,
                num_sources: self.space.num_sources,
            });
        }
        self.inputs.push(input);
        self.outputs.push(output);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn space(&self) -> &InputSpace {
        &self.space
    }

    pub fn inputs(&self) -> &[AugmentedInput] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// Number of samples from each source.
    pub fn source_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.space.num_sources];
        for input in &self.inputs {
            counts[input.source] += 1;
        }
        counts
    }
}
