//! Chain specifications and construction of the one-excitation Hamiltonian.
//!
//! Both models conserve the number of up spins, so the dynamics of a single
//! excitation is fully described by the N×N block of the Hamiltonian on the
//! basis |1⟩ … |N⟩, where |j⟩ is the chain state with only the j-th spin up.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hard lower bound for nearest-neighbour gaps of the long-range model, in
/// units of the homogeneous gap. Keeps the 1/d³ couplings finite.
pub const MIN_GAP: f64 = 0.1;

const DEFAULT_ANISOTROPY: [f64; 3] = [1.0, 1.0, -2.0];

/// Which spin-chain Hamiltonian a [`ChainSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Isotropic nearest-neighbour Heisenberg chain with couplings J_1 … J_{N-1}.
    ShortRange,
    /// Anisotropic dipolar chain with all-to-all 1/d³ couplings; the free
    /// parameters are the N-1 nearest-neighbour gaps.
    LongRange,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::ShortRange => "short_range",
            Model::LongRange => "long_range",
        }
    }
}

/// A validated description of one chain: the model, its size and the
/// site-dependent parameters (exchange couplings or nearest-neighbour gaps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChainSpec")]
pub struct ChainSpec {
    model: Model,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    couplings: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gaps: Option<Vec<f64>>,
    global_j: f64,
    anisotropy: [f64; 3],
    centro_symmetric: bool,
}

/// Unvalidated mirror of [`ChainSpec`] used during deserialization. Unknown
/// keys are rejected so that config typos cannot silently change a run.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChainSpec {
    model: Model,
    n: usize,
    #[serde(default)]
    couplings: Option<Vec<f64>>,
    #[serde(default)]
    gaps: Option<Vec<f64>>,
    #[serde(default = "one")]
    global_j: f64,
    #[serde(default = "default_anisotropy")]
    anisotropy: [f64; 3],
    /// Absent means "infer from the parameters".
    #[serde(default)]
    centro_symmetric: Option<bool>,
}

fn one() -> f64 {
    1.0
}

fn default_anisotropy() -> [f64; 3] {
    DEFAULT_ANISOTROPY
}

impl TryFrom<RawChainSpec> for ChainSpec {
    type Error = Error;

    fn try_from(raw: RawChainSpec) -> Result<ChainSpec> {
        let inferred = raw.centro_symmetric.unwrap_or_else(|| {
            let params = match raw.model {
                Model::ShortRange => raw.couplings.as_deref(),
                Model::LongRange => raw.gaps.as_deref(),
            };
            params.map(is_mirror_symmetric).unwrap_or(false)
        });
        let spec = ChainSpec {
            model: raw.model,
            n: raw.n,
            couplings: raw.couplings,
            gaps: raw.gaps,
            global_j: raw.global_j,
            anisotropy: raw.anisotropy,
            centro_symmetric: inferred,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ChainSpec {
    /// Short-range Heisenberg chain with the given exchange couplings
    /// J_1 … J_{N-1}.
    pub fn short_range(couplings: Vec<f64>) -> Result<Self> {
        let spec = ChainSpec {
            model: Model::ShortRange,
            n: couplings.len() + 1,
            centro_symmetric: is_mirror_symmetric(&couplings),
            couplings: Some(couplings),
            gaps: None,
            global_j: 1.0,
            anisotropy: DEFAULT_ANISOTROPY,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Long-range dipolar chain with the given nearest-neighbour gaps
    /// d_1 … d_{N-1}, prefactor J and the default anisotropy (1, 1, -2).
    pub fn long_range(gaps: Vec<f64>, global_j: f64) -> Result<Self> {
        let spec = ChainSpec {
            model: Model::LongRange,
            n: gaps.len() + 1,
            centro_symmetric: is_mirror_symmetric(&gaps),
            couplings: None,
            gaps: Some(gaps),
            global_j,
            anisotropy: DEFAULT_ANISOTROPY,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same chain with a different anisotropy triple (c_x, c_y, c_z).
    /// Only meaningful for the long-range model.
    pub fn with_anisotropy(mut self, anisotropy: [f64; 3]) -> Result<Self> {
        self.anisotropy = anisotropy;
        self.validate()?;
        Ok(self)
    }

    pub fn model(&self) -> Model {
        self.model
    }

    /// Number of spins N.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Exchange couplings (short-range model only).
    pub fn couplings(&self) -> Option<&[f64]> {
        self.couplings.as_deref()
    }

    /// Nearest-neighbour gaps (long-range model only).
    pub fn gaps(&self) -> Option<&[f64]> {
        self.gaps.as_deref()
    }

    pub fn global_j(&self) -> f64 {
        self.global_j
    }

    pub fn anisotropy(&self) -> [f64; 3] {
        self.anisotropy
    }

    pub fn centro_symmetric(&self) -> bool {
        self.centro_symmetric
    }

    /// The N-1 free parameters of the chain, whichever kind they are.
    pub fn parameters(&self) -> &[f64] {
        match self.model {
            Model::ShortRange => self.couplings.as_deref().expect("validated"),
            Model::LongRange => self.gaps.as_deref().expect("validated"),
        }
    }

    /// Site positions x_1 = 0, x_i = Σ_{l<i} d_l (long-range model only).
    pub fn positions(&self) -> Option<Vec<f64>> {
        let gaps = self.gaps.as_deref()?;
        let mut x = Vec::with_capacity(self.n);
        x.push(0.0);
        let mut acc = 0.0;
        for &d in gaps {
            acc += d;
            x.push(acc);
        }
        Some(x)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("chain length must be >= 2, got {}", self.n)));
        }
        match self.model {
            Model::ShortRange => {
                if self.gaps.is_some() {
                    return Err(Error::invalid("short-range spec must not carry gaps"));
                }
                let j = self
                    .couplings
                    .as_deref()
                    .ok_or_else(|| Error::invalid("short-range spec requires couplings"))?;
                if j.len() != self.n - 1 {
                    return Err(Error::invalid(format!(
                        "expected {} couplings for n = {}, got {}",
                        self.n - 1,
                        self.n,
                        j.len()
                    )));
                }
                if let Some(bad) = j.iter().find(|v| !v.is_finite() || **v <= 0.0) {
                    return Err(Error::invalid(format!("couplings must be positive, got {bad}")));
                }
            }
            Model::LongRange => {
                if self.couplings.is_some() {
                    return Err(Error::invalid("long-range spec must not carry couplings"));
                }
                let d = self
                    .gaps
                    .as_deref()
                    .ok_or_else(|| Error::invalid("long-range spec requires gaps"))?;
                if d.len() != self.n - 1 {
                    return Err(Error::invalid(format!(
                        "expected {} gaps for n = {}, got {}",
                        self.n - 1,
                        self.n,
                        d.len()
                    )));
                }
                if let Some(bad) = d.iter().find(|v| !v.is_finite() || **v < MIN_GAP) {
                    return Err(Error::invalid(format!(
                        "gaps must be >= {MIN_GAP}, got {bad}"
                    )));
                }
                if !self.global_j.is_finite() || self.global_j <= 0.0 {
                    return Err(Error::invalid(format!(
                        "global J must be positive, got {}",
                        self.global_j
                    )));
                }
                if self.anisotropy.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("anisotropy constants must be finite"));
                }
            }
        }
        if self.centro_symmetric && !is_mirror_symmetric(self.parameters()) {
            return Err(Error::invalid(
                "spec flagged centro-symmetric but parameters are not mirror-symmetric",
            ));
        }
        Ok(())
    }
}

fn is_mirror_symmetric(values: &[f64]) -> bool {
    let m = values.len();
    (0..m / 2).all(|k| values[k] == values[m - 1 - k])
}

/// Homogeneous chain of length `n` with every coupling (or gap) equal to
/// `value`; always centro-symmetric.
pub fn homogeneous_baseline(model: Model, n: usize, value: f64) -> Result<ChainSpec> {
    if n < 2 {
        return Err(Error::invalid(format!("chain length must be >= 2, got {n}")));
    }
    let params = vec![value; n - 1];
    match model {
        Model::ShortRange => ChainSpec::short_range(params),
        Model::LongRange => ChainSpec::long_range(params, 1.0),
    }
}

/// Real symmetric N×N Hamiltonian on the single-spin-up basis,
/// h_{jk} = ⟨j|H|k⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct OneExcitationHamiltonian {
    n: usize,
    matrix: DMatrix<f64>,
}

impl OneExcitationHamiltonian {
    /// Wrap an externally built matrix. The matrix must be square, at least
    /// 2×2 and exactly symmetric.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || n < 2 {
            return Err(Error::invalid(format!(
                "expected a square matrix of size >= 2, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for j in 0..n {
            for k in (j + 1)..n {
                if matrix[(j, k)] != matrix[(k, j)] {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({j}, {k})"
                    )));
                }
            }
        }
        Ok(OneExcitationHamiltonian { n, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Whether h_{jk} = h_{N+1-k, N+1-j} holds exactly.
    pub fn is_persymmetric(&self) -> bool {
        let n = self.n;
        (0..n).all(|j| (0..n).all(|k| self.matrix[(j, k)] == self.matrix[(n - 1 - k, n - 1 - j)]))
    }
}

/// Build the one-excitation block for either model.
pub fn build_hamiltonian(spec: &ChainSpec) -> Result<OneExcitationHamiltonian> {
    match spec.model() {
        Model::ShortRange => build_short_range(spec),
        Model::LongRange => build_long_range(spec),
    }
}

/// One-excitation block of the isotropic Heisenberg chain:
/// h_{j,j+1} = -2 J_j and h_{jj} = -Σ_i J_i + 2 (J_{j-1} + J_j), with the
/// open-chain convention J_0 = J_N = 0.
pub fn build_short_range(spec: &ChainSpec) -> Result<OneExcitationHamiltonian> {
    if spec.model() != Model::ShortRange {
        return Err(Error::invalid("build_short_range requires a short-range spec"));
    }
    let n = spec.n();
    let j = spec.couplings().expect("validated");
    let total: f64 = j.iter().sum();

    let mut h = DMatrix::zeros(n, n);
    for k in 0..n - 1 {
        h[(k, k + 1)] = -2.0 * j[k];
        h[(k + 1, k)] = -2.0 * j[k];
    }
    for site in 0..n {
        let left = if site == 0 { 0.0 } else { j[site - 1] };
        let right = if site == n - 1 { 0.0 } else { j[site] };
        h[(site, site)] = -total + 2.0 * (left + right);
    }
    Ok(OneExcitationHamiltonian { n, matrix: h })
}

/// One-excitation block of the anisotropic dipolar chain: for j ≠ k,
/// h_{jk} = (c_x + c_y) J / |x_j - x_k|³, and
/// h_{jj} = c_z J (Σ_{a<b} 1/|x_a - x_b|³ - 2 Σ_{a≠j} 1/|x_a - x_j|³).
pub fn build_long_range(spec: &ChainSpec) -> Result<OneExcitationHamiltonian> {
    if spec.model() != Model::LongRange {
        return Err(Error::invalid("build_long_range requires a long-range spec"));
    }
    let n = spec.n();
    let x = spec.positions().expect("validated");
    let [cx, cy, cz] = spec.anisotropy();
    let jg = spec.global_j();
    let mirror = spec.centro_symmetric();

    // Inverse cubed distances for every pair a < b. For centro-symmetric
    // chains each value is computed once for the canonical member of its
    // mirror orbit and copied, so persymmetry holds bit-exactly even though
    // mirrored distances sum the same gaps in a different order.
    let mut inv_cube = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in (a + 1)..n {
            let (ca, cb) = if mirror {
                let (ma, mb) = (n - 1 - b, n - 1 - a);
                if (ma, mb) < (a, b) {
                    (ma, mb)
                } else {
                    (a, b)
                }
            } else {
                (a, b)
            };
            let d = x[cb] - x[ca];
            let v = 1.0 / (d * d * d);
            inv_cube[a][b] = v;
            inv_cube[b][a] = v;
        }
    }

    let mut pair_sum = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            pair_sum += inv_cube[a][b];
        }
    }
    let mut site_sum = vec![0.0; n];
    for site in 0..n {
        let m = n - 1 - site;
        if mirror && m < site {
            site_sum[site] = site_sum[m];
        } else {
            site_sum[site] = (0..n).filter(|&a| a != site).map(|a| inv_cube[a][site]).sum();
        }
    }

    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = cz * jg * (pair_sum - 2.0 * site_sum[j]);
        for k in (j + 1)..n {
            let v = (cx + cy) * jg * inv_cube[j][k];
            h[(j, k)] = v;
            h[(k, j)] = v;
        }
    }
    Ok(OneExcitationHamiltonian { n, matrix: h })
}
