//! Physical model: species, masses, interaction matrices, the pair operator
//! 𝒱 and per-species gauge rotations.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::WignerField;
use crate::scalar::Real;
use crate::spinalg::{tensor, PairBlock, SpinBlock};

/// Rank threshold for interaction matrices.
pub const RANK_TOL: f64 = 1e-12;
/// Unitarity tolerance for gauge matrices.
pub const UNITARY_TOL: f64 = 1e-12;

/// One of the four distinguishable fermion species.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Species {
    A,
    B,
    C,
    D,
}

impl Species {
    pub const ALL: [Species; 4] = [Species::A, Species::B, Species::C, Species::D];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Species {
        Self::ALL[i]
    }

    pub fn tag(self) -> char {
        ['a', 'b', 'c', 'd'][self.index()]
    }

    pub fn from_tag(c: char) -> Option<Species> {
        match c {
            'a' => Some(Species::A),
            'b' => Some(Species::B),
            'c' => Some(Species::C),
            'd' => Some(Species::D),
            _ => None,
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

/// Species masses in natural units, indexed by [`Species::index`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Masses<T: Real>(pub [T; 4]);

impl<T: Real> Masses<T> {
    pub fn new(m: [T; 4]) -> Result<Self> {
        for s in Species::ALL {
            let v = m[s.index()];
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Domain(format!("mass of species {s} must be positive, got {v}")));
            }
        }
        Ok(Masses(m))
    }

    #[inline]
    pub fn of(&self, s: Species) -> T {
        self.0[s.index()]
    }

    /// Product of all four masses.
    pub fn product(&self) -> T {
        self.0.iter().fold(T::one(), |acc, &m| acc * m)
    }

    /// Product of the three masses other than `s`.
    pub fn cast<U: Real>(&self) -> Masses<U> {
        Masses(self.0.map(|m| U::lit(m.as_f64())))
    }

    pub fn others(&self, s: Species) -> T {
        Species::ALL
            .iter()
            .filter(|&&o| o != s)
            .fold(T::one(), |acc, &o| acc * self.of(o))
    }
}

impl<T: Real> Default for Masses<T> {
    /// `(1, 4/5, 1/5, 1/2)` for species `(a, b, c, d)`.
    fn default() -> Self {
        Masses([T::one(), T::lit(0.8), T::lit(0.2), T::lit(0.5)])
    }
}

/// `|p| = sqrt(2 m ε)` from the dispersion relation `ε = |p|² / 2m`.
pub fn momentum_from_energy<T: Real>(mass: T, eps: T) -> Result<T> {
    if eps < T::zero() || !eps.is_finite() {
        return Err(Error::Domain(format!("energy must be non-negative, got {eps}")));
    }
    Ok((T::lit(2.0) * mass * eps).sqrt())
}

/// The four 2×2 interaction matrices `V^ab, V^cd, V^ad, V^cb`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteractionSet<T: Real> {
    pub ab: SpinBlock<T>,
    pub cd: SpinBlock<T>,
    pub ad: SpinBlock<T>,
    pub cb: SpinBlock<T>,
}

impl<T: Real> InteractionSet<T> {
    pub fn named(&self) -> [(&'static str, &SpinBlock<T>); 4] {
        [("ab", &self.ab), ("cd", &self.cd), ("ad", &self.ad), ("cb", &self.cb)]
    }

    /// Checks that every matrix has full rank.
    pub fn validate(&self) -> Result<()> {
        for (pair, m) in self.named() {
            let det = m.det().norm().as_f64();
            if !(det > RANK_TOL) {
                return Err(Error::RankDeficient { pair, det });
            }
        }
        Ok(())
    }

    /// Matrices with imaginary parts above tolerance. Such sets are
    /// legal (gauge rotations produce them) but unusual as model input.
    pub fn warnings(&self) -> Vec<String> {
        self.named()
            .iter()
            .filter_map(|(pair, m)| {
                let im = m.e.iter().flatten().fold(0.0f64, |acc, z| acc.max(z.im.abs().as_f64()));
                (im > 1e-12).then(|| format!("V{pair} has imaginary part {im:.3e}"))
            })
            .collect()
    }

    pub fn cast<U: Real>(&self) -> InteractionSet<U> {
        InteractionSet {
            ab: self.ab.cast(),
            cd: self.cd.cast(),
            ad: self.ad.cast(),
            cb: self.cb.cast(),
        }
    }
}

/// Interaction set for the β-decay channel `n + ν ↔ p + e` with species
/// map a: n, b: p, c: ν, d: e.
pub fn beta_decay_interactions<T: Real>(c_v: T, c_a: T) -> Result<InteractionSet<T>> {
    let set = InteractionSet {
        ab: SpinBlock::scalar(c_v - c_a),
        cd: SpinBlock::identity(),
        ad: SpinBlock::identity(),
        cb: SpinBlock::scalar(T::lit(2.0) * c_a),
    };
    set.validate()?;
    Ok(set)
}

/// Diagonal interaction set whose pair operator has a zero outer frame with
/// inner block `[[-5/8, 1/3], [-1/4, 2/15]]`.
pub fn zero_frame_interactions<T: Real>() -> InteractionSet<T> {
    let one = T::one();
    InteractionSet {
        ab: SpinBlock::diag(one, T::lit(2.0 / 15.0)),
        cd: SpinBlock::diag(one, T::lit(-5.0 / 8.0)),
        ad: SpinBlock::diag(one, T::lit(0.25)),
        cb: SpinBlock::diag(-one, T::lit(1.0 / 3.0)),
    }
}

/// The 4×4 pair operator `𝒱 = (V^ab ⊗ V^cd) + (V^ad ⊗ V^cb) T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VOp<T: Real> {
    pub matrix: PairBlock<T>,
}

impl<T: Real> VOp<T> {
    pub fn from_matrix(matrix: PairBlock<T>) -> Self {
        VOp { matrix }
    }

    pub fn adjoint(&self) -> PairBlock<T> {
        self.matrix.adjoint()
    }

    /// `(U^a ⊗ U^c) 𝒱 (U^b ⊗ U^d)†`.
    pub fn rotate(&self, g: &GaugeRotation<T>) -> VOp<T> {
        let left = tensor(g.of(Species::A), g.of(Species::C));
        let right = tensor(g.of(Species::B), g.of(Species::D));
        VOp {
            matrix: self.matrix.sandwich(&left, &right),
        }
    }
}

/// Builds 𝒱 from validated interaction matrices.
pub fn build_vop<T: Real>(v: &InteractionSet<T>) -> Result<VOp<T>> {
    v.validate()?;
    Ok(build_vop_unchecked(v))
}

pub(crate) fn build_vop_unchecked<T: Real>(v: &InteractionSet<T>) -> VOp<T> {
    let direct = tensor(&v.ab, &v.cd);
    let crossed = tensor(&v.ad, &v.cb) * PairBlock::swap();
    VOp {
        matrix: direct + crossed,
    }
}

/// One fixed unitary per species.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeRotation<T: Real> {
    pub u: [SpinBlock<T>; 4],
}

impl<T: Real> GaugeRotation<T> {
    pub fn new(u: [SpinBlock<T>; 4]) -> Result<Self> {
        let g = GaugeRotation { u };
        g.validate()?;
        Ok(g)
    }

    pub fn identity() -> Self {
        GaugeRotation {
            u: [SpinBlock::identity(); 4],
        }
    }

    /// Real rotation `[[cos φ, sin φ], [−sin φ, cos φ]]` on species `s`, identity elsewhere.
    pub fn real_rotation(s: Species, phi: T) -> Self {
        let mut g = Self::identity();
        let (sn, cs) = phi.sin_cos();
        g.u[s.index()] = SpinBlock::from_real([cs, sn, -sn, cs]);
        g
    }

    #[inline]
    pub fn of(&self, s: Species) -> &SpinBlock<T> {
        &self.u[s.index()]
    }

    pub fn validate(&self) -> Result<()> {
        for s in Species::ALL {
            let u = self.of(s);
            let defect = (u.adjoint() * *u - SpinBlock::identity()).max_abs().as_f64();
            if !(defect <= UNITARY_TOL) {
                return Err(Error::NotUnitary { species: s, defect });
            }
        }
        Ok(())
    }

    pub fn inverse(&self) -> Self {
        GaugeRotation {
            u: self.u.map(|u| u.adjoint()),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.u.iter().all(|u| *u == SpinBlock::identity())
    }

    /// `V^{αβ} → U^α V^{αβ} (U^β)†`.
    pub fn rotate_interactions(&self, v: &InteractionSet<T>) -> InteractionSet<T> {
        use Species::*;
        let r = |m: &SpinBlock<T>, x: Species, y: Species| *self.of(x) * *m * self.of(y).adjoint();
        InteractionSet {
            ab: r(&v.ab, A, B),
            cd: r(&v.cd, C, D),
            ad: r(&v.ad, A, D),
            cb: r(&v.cb, C, B),
        }
    }

    /// `W^α → U^α W^α (U^α)†` on every shell.
    pub fn rotate_field(&self, w: &WignerField<T>) -> WignerField<T> {
        let mut out = w.clone();
        for s in Species::ALL {
            let u = self.of(s);
            for b in out.species_mut(s) {
                *b = b.conjugate_by(u);
            }
        }
        out
    }

    pub fn cast<U: Real>(&self) -> GaugeRotation<U> {
        GaugeRotation {
            u: self.u.map(|m| m.cast()),
        }
    }
}

/// Applies a gauge rotation jointly to interaction matrices and a state.
pub fn apply_gauge<T: Real>(
    g: &GaugeRotation<T>,
    v: &InteractionSet<T>,
    w: &WignerField<T>,
) -> Result<(InteractionSet<T>, WignerField<T>)> {
    g.validate()?;
    Ok((g.rotate_interactions(v), g.rotate_field(w)))
}

/// Named interaction presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// β decay with `C_V = 1`, `C_A = −1.255`.
    BetaDecay,
    /// Zero-outer-frame pair operator.
    ZeroFrame,
    /// The zero-frame operator rotated on species b by `φ = π/5`.
    ZeroFrameRotated,
}

impl Preset {
    pub const C_V: f64 = 1.0;
    pub const C_A: f64 = -1.255;

    pub fn name(self) -> &'static str {
        match self {
            Preset::BetaDecay => "beta-decay",
            Preset::ZeroFrame => "zero-frame",
            Preset::ZeroFrameRotated => "zero-frame-rotated",
        }
    }

    pub fn from_name(s: &str) -> Option<Preset> {
        [Preset::BetaDecay, Preset::ZeroFrame, Preset::ZeroFrameRotated]
            .into_iter()
            .find(|p| p.name() == s)
    }

    /// The gauge under which the preset exhibits its structure pattern.
    pub fn gauge<T: Real>(self) -> GaugeRotation<T> {
        match self {
            Preset::ZeroFrameRotated => GaugeRotation::real_rotation(Species::B, T::PI() / T::lit(5.0)),
            _ => GaugeRotation::identity(),
        }
    }

    pub fn interactions<T: Real>(self) -> InteractionSet<T> {
        match self {
            Preset::BetaDecay => {
                beta_decay_interactions(T::lit(Self::C_V), T::lit(Self::C_A)).expect("full-rank preset")
            }
            Preset::ZeroFrame => zero_frame_interactions(),
            Preset::ZeroFrameRotated => self.gauge().rotate_interactions(&zero_frame_interactions()),
        }
    }
}

/// Overall constants of the collision integrals after the angular
/// integration, which fix the unit of time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RateConvention {
    /// `1` for the dissipative and `1/π` for the effective-Hamiltonian
    /// integral, from `π/(2π)³ ∫d⁹p` and `1/(2π)³ ∫d⁹p` with the solid
    /// angles integrated out (`8π² min|p| / Π|p|`).
    #[default]
    Reduced,
    /// `(2π)³` and `2(2π)²`; the same flow with time shorter by `(2π)³`.
    EnergyForm,
}

impl RateConvention {
    pub fn name(self) -> &'static str {
        match self {
            RateConvention::Reduced => "reduced",
            RateConvention::EnergyForm => "energy-form",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [RateConvention::Reduced, RateConvention::EnergyForm]
            .into_iter()
            .find(|c| c.name() == s)
    }

    pub fn diss_constant<T: Real>(self) -> T {
        match self {
            RateConvention::Reduced => T::one(),
            RateConvention::EnergyForm => (T::lit(2.0) * T::PI()).powi(3),
        }
    }

    pub fn cons_constant<T: Real>(self) -> T {
        match self {
            RateConvention::Reduced => T::PI().recip(),
            RateConvention::EnergyForm => T::lit(2.0) * (T::lit(2.0) * T::PI()).powi(2),
        }
    }
}

/// Masses plus interactions; the pair operator is derived once.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T: Real> {
    pub masses: Masses<T>,
    pub interactions: InteractionSet<T>,
    pub vop: VOp<T>,
    pub rates: RateConvention,
}

impl<T: Real> Model<T> {
    pub fn new(masses: Masses<T>, interactions: InteractionSet<T>) -> Result<Self> {
        let vop = build_vop(&interactions)?;
        Ok(Model {
            masses,
            interactions,
            vop,
            rates: RateConvention::default(),
        })
    }

    pub fn preset(p: Preset) -> Self {
        Self::new(Masses::default(), p.interactions()).expect("valid preset")
    }

    pub fn with_rates(mut self, rates: RateConvention) -> Self {
        self.rates = rates;
        self
    }

    /// Rotated copy of the model.
    pub fn rotated(&self, g: &GaugeRotation<T>) -> Result<Self> {
        g.validate()?;
        Ok(Self::new(self.masses, g.rotate_interactions(&self.interactions))?.with_rates(self.rates))
    }
}
