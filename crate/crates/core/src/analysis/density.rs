//! Densities on the log-odds axis: the weight density of a skill population
//! and the signed vote density derived from it.

use statrs::function::beta::ln_beta;

use crate::aggregation::{logistic, logit, softplus};
use crate::domain::SkillDistribution;
use crate::error::{Error, Result};

/// Mass allowed outside the grid before a density counts as under-resolved.
pub const TRUNCATION_WARNING: f64 = 1e-3;

/// Symmetric grid layout `[-half_width, half_width]` with spacing `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { half_width: 12.0, step: 0.005 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.half_width >= self.step && self.half_width.is_finite()) {
            return Err(Error::Precondition(format!("invalid grid {self:?}")));
        }
        Ok(())
    }

    fn half_points(&self) -> usize {
        (self.half_width / self.step).round() as usize
    }
}

/// Density sampled at `-half*step, ..., 0, ..., half*step`.
///
/// Each value stands for the cell of width `step` centred on its grid point,
/// so `step * values[i]` is the probability mass of that cell. Mass that fell
/// outside the grid is kept in `truncated_mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPdf {
    half: usize,
    step: f64,
    values: Vec<f64>,
    truncated_mass: f64,
}

impl GridPdf {
    pub fn new(step: f64, values: Vec<f64>, truncated_mass: f64) -> Result<Self> {
        if values.len() % 2 == 0 {
            return Err(Error::Precondition("grid must have an odd number of points".into()));
        }
        if !(step > 0.0) {
            return Err(Error::Precondition(format!("grid step {step} must be positive")));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Precondition("density values must be nonnegative".into()));
        }
        Ok(GridPdf {
            half: values.len() / 2,
            step,
            values,
            truncated_mass: truncated_mass.max(0.0),
        })
    }

    /// Samples `f` on the grid. Whatever the samples miss of unit mass is
    /// recorded as truncated; an overshoot from quadrature is normalized away.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        spec.validate()?;
        let half = spec.half_points();
        let values: Vec<f64> = (0..=2 * half)
            .map(|i| f((i as f64 - half as f64) * spec.step).max(0.0))
            .collect();
        let mass: f64 = values.iter().sum::<f64>() * spec.step;
        let (values, truncated) = if mass > 1.0 {
            (values.into_iter().map(|v| v / mass).collect(), 0.0)
        } else {
            (values, 1.0 - mass)
        };
        GridPdf::new(spec.step, values, truncated)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn hi(&self) -> f64 {
        self.half as f64 * self.step
    }

    pub fn lo(&self) -> f64 {
        -self.hi()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn half_points(&self) -> usize {
        self.half
    }

    pub fn z(&self, i: usize) -> f64 {
        (i as f64 - self.half as f64) * self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Density at grid point nearest to `z` (zero off the grid).
    pub fn value_at(&self, z: f64) -> f64 {
        let k = (z / self.step).round() + self.half as f64;
        if k < 0.0 || k as usize >= self.values.len() {
            0.0
        } else {
            self.values[k as usize]
        }
    }

    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    /// Cell masses `step * values[i]`.
    pub fn masses(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.step).collect()
    }

    pub fn grid_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step
    }

    /// True when less than [`TRUNCATION_WARNING`] of the mass is off-grid.
    pub fn is_well_resolved(&self) -> bool {
        self.truncated_mass <= TRUNCATION_WARNING
    }
}

/// Point masses at `(i - half) * unit`, used for populations with a single
/// skill value, whose walks live exactly on the lattice `unit * Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePdf {
    unit: f64,
    half: usize,
    masses: Vec<f64>,
}

impl LatticePdf {
    pub fn new(unit: f64, masses: Vec<f64>) -> Result<Self> {
        if masses.len() % 2 == 0 {
            return Err(Error::Precondition("lattice must have an odd number of sites".into()));
        }
        if !(unit > 0.0 && unit.is_finite()) {
            return Err(Error::Precondition(format!("lattice unit {unit} must be positive")));
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::Precondition("lattice masses must be nonnegative".into()));
        }
        Ok(LatticePdf { unit, half: masses.len() / 2, masses })
    }

    pub fn unit(&self) -> f64 {
        self.unit
    }

    pub fn half_points(&self) -> usize {
        self.half
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn z(&self, i: usize) -> f64 {
        (i as f64 - self.half as f64) * self.unit
    }

    /// Mass at lattice site `k` (position `k * unit`).
    pub fn mass_at(&self, k: i64) -> f64 {
        let idx = k + self.half as i64;
        if idx < 0 || idx as usize >= self.masses.len() {
            0.0
        } else {
            self.masses[idx as usize]
        }
    }

    /// If the only occupied sites are `±1`, the skill `p` of the homogeneous
    /// crowd that produced this vote law.
    pub fn homogeneous_skill(&self) -> Option<f64> {
        let occupied_elsewhere = self
            .masses
            .iter()
            .enumerate()
            .any(|(i, &m)| m > 0.0 && (i as i64 - self.half as i64).abs() != 1);
        let (pos, neg) = (self.mass_at(1), self.mass_at(-1));
        if occupied_elsewhere || pos + neg <= 0.0 {
            None
        } else {
            Some(pos / (pos + neg))
        }
    }
}

/// A density on the log-odds axis: sampled on a grid, or exact point masses
/// on a lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Grid(GridPdf),
    Lattice(LatticePdf),
}

impl Density {
    /// `(position, mass)` for every support point.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Density::Grid(g) => (0..g.len()).map(|i| (g.z(i), g.values[i] * g.step)).collect(),
            Density::Lattice(l) => (0..l.masses.len()).map(|i| (l.z(i), l.masses[i])).collect(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Density::Grid(g) => g.grid_mass(),
            Density::Lattice(l) => l.masses.iter().sum(),
        }
    }

    pub fn truncated_mass(&self) -> f64 {
        match self {
            Density::Grid(g) => g.truncated_mass,
            Density::Lattice(_) => 0.0,
        }
    }

    /// Support half-width.
    pub fn half_width(&self) -> f64 {
        match self {
            Density::Grid(g) => g.hi(),
            Density::Lattice(l) => l.half as f64 * l.unit,
        }
    }

    pub fn as_grid(&self) -> Option<&GridPdf> {
        match self {
            Density::Grid(g) => Some(g),
            Density::Lattice(_) => None,
        }
    }

    pub fn as_lattice(&self) -> Option<&LatticePdf> {
        match self {
            Density::Grid(_) => None,
            Density::Lattice(l) => Some(l),
        }
    }
}

// ln of the logistic function, stable for either sign.
fn ln_logistic(z: f64) -> f64 {
    -softplus(-z)
}

fn single_atom(p: f64) -> Density {
    let w = logit(p);
    let masses = if w > 0.0 {
        vec![0.0, 0.0, 1.0]
    } else if w < 0.0 {
        vec![1.0, 0.0, 0.0]
    } else {
        vec![0.0, 1.0, 0.0]
    };
    let unit = if w == 0.0 { 1.0 } else { w.abs() };
    Density::Lattice(LatticePdf { unit, half: 1, masses })
}

/// Density of the vote weight `w = ln(p/(1-p))` under the population.
///
/// Beta populations are sampled on `spec`; single-skill populations become an
/// exact lattice atom; finite multi-point populations are spread onto the two
/// nearest grid points of each atom, preserving its mass and position.
pub fn weight_density(pop: &SkillDistribution, spec: GridSpec) -> Result<Density> {
    pop.validate()?;
    match pop {
        SkillDistribution::Beta { alpha, beta } => {
            let ln_norm = ln_beta(*alpha, *beta);
            let (a, b) = (*alpha, *beta);
            // f_P(s(z)) s(z)(1-s(z)) with s the logistic map
            let g = GridPdf::from_fn(spec, |z| {
                (a * ln_logistic(z) + b * ln_logistic(-z) - ln_norm).exp()
            })?;
            Ok(Density::Grid(g))
        }
        SkillDistribution::Dirac { p } => Ok(single_atom(*p)),
        SkillDistribution::Empirical { points } => {
            let occupied: Vec<_> = points.iter().filter(|(_, m)| *m > 0.0).collect();
            if occupied.len() == 1 {
                return Ok(single_atom(occupied[0].0));
            }
            spec.validate()?;
            let half = spec.half_points();
            let mut values = vec![0.0; 2 * half + 1];
            let mut truncated = 0.0;
            for &&(p, mass) in &occupied {
                let x = logit(p) / spec.step + half as f64;
                let lo = x.floor();
                let frac = x - lo;
                if lo < 0.0 || lo as usize + 1 >= values.len() {
                    truncated += mass;
                    continue;
                }
                values[lo as usize] += mass * (1.0 - frac) / spec.step;
                values[lo as usize + 1] += mass * frac / spec.step;
            }
            Ok(Density::Grid(GridPdf::new(spec.step, values, truncated)?))
        }
    }
}

/// Density of the signed increment `x = ±w` a vote adds to the log-odds of a
/// task whose true label is +1: `f_V(z) = s(z) (f_W(z) + f_W(-z))`, with `s`
/// the logistic function.
pub fn vote_density(weights: &Density) -> Density {
    match weights {
        Density::Grid(g) => {
            let n = g.values.len();
            let values = (0..n)
                .map(|i| logistic(g.z(i)) * (g.values[i] + g.values[n - 1 - i]))
                .collect();
            Density::Grid(GridPdf {
                half: g.half,
                step: g.step,
                values,
                truncated_mass: g.truncated_mass,
            })
        }
        Density::Lattice(l) => {
            let n = l.masses.len();
            let masses = (0..n)
                .map(|i| logistic(l.z(i)) * (l.masses[i] + l.masses[n - 1 - i]))
                .collect();
            Density::Lattice(LatticePdf { unit: l.unit, half: l.half, masses })
        }
    }
}

/// Vote density straight from a population.
pub fn population_vote_density(pop: &SkillDistribution, spec: GridSpec) -> Result<Density> {
    Ok(vote_density(&weight_density(pop, spec)?))
}
