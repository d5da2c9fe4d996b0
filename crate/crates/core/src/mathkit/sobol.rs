//! Sobol low-discrepancy sequences for up to 32 dimensions.
//!
//! Direction numbers come from the classic Bratley–Fox table (primitive
//! polynomials plus initial odd integers m_k); points are generated with
//! Gray-code stepping, so consecutive points differ in one direction-number
//! XOR per dimension. The sequence is unscrambled and fully deterministic:
//! two streams with the same (dimension, skip) emit identical bits on every
//! platform.

use crate::error::MathError;

/// Largest supported dimension of the embedded direction-number table.
pub const MAX_DIMENSION: usize = 32;

/// Number of bit levels carried per dimension (supports 2^31 points).
const LOG_BITS: usize = 31;

/// Primitive polynomials over GF(2), encoded with leading and trailing bits
/// set (e.g. 13 = 1101 = x^3 + x^2 + 1). Entry d serves dimension d+1; the
/// first dimension uses the van der Corput sequence and has no polynomial.
const POLYNOMIALS: [u64; MAX_DIMENSION] = [
    1, 3, 7, 11, 13, 19, 25, 37, 59, 47, 61, 55, 41, 67, 97, 91, 109, 103, 115, 131, 193, 137,
    145, 143, 241, 157, 185, 167, 229, 171, 213, 191,
];

/// Initial direction-number integers m_k (rows are levels, columns are
/// dimensions); zeros are placeholders below the polynomial degree.
const INITIAL_M: [[u64; MAX_DIMENSION]; 7] = [
    [
        1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1,
        1, 1,
    ],
    [
        0, 0, 1, 3, 1, 3, 1, 3, 3, 1, 3, 1, 3, 1, 3, 1, 1, 3, 1, 3, 1, 3, 1, 3, 3, 1, 3, 1, 3, 1,
        3, 1,
    ],
    [
        0, 0, 0, 7, 5, 1, 3, 3, 7, 5, 5, 7, 7, 1, 3, 3, 7, 5, 1, 1, 5, 3, 3, 1, 7, 5, 1, 3, 3, 7,
        5, 1,
    ],
    [
        0, 0, 0, 0, 0, 1, 7, 9, 13, 11, 1, 3, 7, 9, 5, 13, 13, 11, 3, 15, 5, 3, 15, 7, 9, 13, 9,
        1, 11, 7, 5, 15,
    ],
    [
        0, 0, 0, 0, 0, 0, 0, 9, 3, 27, 15, 29, 21, 23, 19, 11, 25, 7, 13, 17, 1, 25, 29, 3, 31,
        11, 5, 23, 27, 19, 21, 5,
    ],
    [
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 37, 33, 7, 5, 11, 39, 63, 27, 17, 15, 23, 29, 3,
        21, 13, 31, 25, 9, 49,
    ],
    [
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 13, 33, 115, 41, 79, 17, 29,
        119, 75, 73, 105, 7, 59,
    ],
];

/// Expand the direction numbers for one dimension to all bit levels.
///
/// Returned values are scaled so that v[j] occupies the top `j+1` bits of a
/// LOG_BITS-wide fixed-point fraction.
fn direction_numbers(dim_index: usize) -> [u64; LOG_BITS] {
    let mut m = [0u64; LOG_BITS];
    if dim_index == 0 {
        // van der Corput: m_k = 1 for all levels
        m = [1; LOG_BITS];
    } else {
        let poly = POLYNOMIALS[dim_index];
        let degree = (63 - poly.leading_zeros()) as usize;
        for (level, row) in INITIAL_M.iter().enumerate().take(degree) {
            m[level] = row[dim_index];
        }
        // m_j = 2 a_1 m_{j-1} ^ 4 a_2 m_{j-2} ^ ... ^ 2^s m_{j-s} ^ m_{j-s}
        for j in degree..LOG_BITS {
            let mut value = m[j - degree] ^ (m[j - degree] << degree);
            for k in 1..degree {
                let a_k = (poly >> (degree - k)) & 1;
                if a_k == 1 {
                    value ^= m[j - k] << k;
                }
            }
            m[j] = value;
        }
    }
    let mut v = [0u64; LOG_BITS];
    for (j, value) in m.iter().enumerate() {
        debug_assert!(value % 2 == 1 && *value < (1 << (j + 1)));
        v[j] = value << (LOG_BITS - 1 - j);
    }
    v
}

/// A deterministic Sobol point stream with a single-owner mutable cursor.
pub struct SobolStream {
    dimension: usize,
    next_index: u64,
    state: Vec<u64>,
    v: Vec<[u64; LOG_BITS]>,
}

impl SobolStream {
    /// Create a stream that starts at index 1, skipping the all-zeros point.
    pub fn new(dimension: usize) -> Result<Self, MathError> {
        Self::with_skip(dimension, 1)
    }

    /// Create a stream whose first emitted point has index `skip`.
    pub fn with_skip(dimension: usize, skip: u64) -> Result<Self, MathError> {
        if dimension < 1 || dimension > MAX_DIMENSION {
            return Err(MathError::UnsupportedDimension {
                requested: dimension,
                max: MAX_DIMENSION,
            });
        }
        let v: Vec<[u64; LOG_BITS]> = (0..dimension).map(direction_numbers).collect();
        let mut stream = SobolStream {
            dimension,
            next_index: 0,
            state: vec![0; dimension],
            v,
        };
        for _ in 0..skip {
            stream.advance();
        }
        Ok(stream)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Index of the point the next call to `next_point` will emit.
    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    /// Emit the next point of the sequence, in [0,1)^d.
    pub fn next_point(&mut self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        self.fill_next(&mut out);
        out
    }

    /// Emit the next point into a caller-provided buffer.
    pub fn fill_next(&mut self, out: &mut [f64]) {
        assert_eq!(out.len(), self.dimension);
        const SCALE: f64 = 1.0 / (1u64 << LOG_BITS) as f64;
        for (slot, q) in out.iter_mut().zip(self.state.iter()) {
            *slot = *q as f64 * SCALE;
        }
        self.advance();
    }

    /// Gray-code step: XOR the direction number of the lowest zero bit of
    /// the current index into every dimension's state.
    fn advance(&mut self) {
        let level = (!self.next_index).trailing_zeros() as usize;
        assert!(
            level < LOG_BITS,
            "Sobol stream exhausted (2^{LOG_BITS} points)"
        );
        for (q, v) in self.state.iter_mut().zip(self.v.iter()) {
            *q ^= v[level];
        }
        self.next_index += 1;
    }
}

/// Generate `n` Sobol points in [0,1)^d starting at index `skip`.
pub fn sobol_points(d: usize, n: usize, skip: u64) -> Result<Vec<Vec<f64>>, MathError> {
    let mut stream = SobolStream::with_skip(d, skip)?;
    Ok((0..n).map(|_| stream.next_point()).collect())
}
