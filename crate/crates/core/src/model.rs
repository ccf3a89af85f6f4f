//! Material data, conductivity laws and the preset problems.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{CouplingTensor, VoigtTensor};

/// Function of `(t, x, y)`.
pub type TimeScalarFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
/// Vector function of `(t, x, y)`.
pub type TimeVectorFn = Arc<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>;
/// Function of `(x, y)`.
pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Vector function of `(x, y)`.
pub type VectorFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Temperature dependent electrical conductivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conductivity {
    Constant(f64),
    /// `base - atan(slope * theta - shift)`
    Arctan {
        base: f64,
        slope: f64,
        shift: f64,
    },
    /// Silicon-like law in S/m with `theta` measured from `ambient` kelvin:
    /// `38e6/27 / (3000 + 550 (pi/2 + atan((ambient + theta - 250) / 250)))`.
    Silicon {
        ambient: f64,
    },
}

const SILICON_SCALE: f64 = 38e6 / 27.0;

impl Conductivity {
    /// `2.5 - atan(5 theta - 10)`.
    pub fn problem1() -> Conductivity {
        Conductivity::Arctan {
            base: 2.5,
            slope: 5.0,
            shift: 10.0,
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            Conductivity::Constant(s) => s,
            Conductivity::Arctan { base, slope, shift } => base - (slope * theta - shift).atan(),
            Conductivity::Silicon { ambient } => {
                let t1 = ambient + theta;
                SILICON_SCALE / (3000.0 + 550.0 * (FRAC_PI_2 + ((t1 - 250.0) / 250.0).atan()))
            }
        }
    }

    /// Declared `(sigma_min, sigma_max)`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Conductivity::Constant(s) => (s, s),
            Conductivity::Arctan { base, .. } => (base - FRAC_PI_2, base + FRAC_PI_2),
            Conductivity::Silicon { .. } => (SILICON_SCALE / (3000.0 + 550.0 * PI), SILICON_SCALE / 3000.0),
        }
    }

    /// Declared bound on `|sigma'|`.
    pub fn derivative_bound(&self) -> f64 {
        match *self {
            Conductivity::Constant(_) => 0.0,
            Conductivity::Arctan { slope, .. } => slope.abs(),
            Conductivity::Silicon { .. } => SILICON_SCALE * 550.0 / 250.0 / (3000.0 * 3000.0),
        }
    }
}

impl fmt::Display for Conductivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conductivity::Constant(s) => write!(f, "constant({s})"),
            Conductivity::Arctan { base, slope, shift } => {
                write!(f, "arctan(base={base}, slope={slope}, shift={shift})")
            }
            Conductivity::Silicon { ambient } => write!(f, "silicon(ambient={ambient})"),
        }
    }
}

/// Constitutive data. With unit coefficients the heat equation reads
/// `theta' = lap(theta) + sigma |grad phi|^2 - M : eps(u')`; in general
/// `rho c theta' = k lap(theta) + sigma |grad phi|^2 - Theta0 M : eps(u')` and
/// `rho u'' = div(A eps(u') + B eps(u) - M theta) + f`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    pub viscosity: VoigtTensor,
    pub elasticity: VoigtTensor,
    pub expansion: CouplingTensor,
    pub conductivity: Conductivity,
    pub density: f64,
    pub heat_capacity: f64,
    pub thermal_conductivity: f64,
    /// Scale on the thermal coupling term of the heat equation.
    pub ambient_temperature: f64,
}

impl MaterialModel {
    pub fn problem1() -> MaterialModel {
        MaterialModel {
            viscosity: VoigtTensor::div_shear(),
            elasticity: VoigtTensor::div_shear(),
            expansion: CouplingTensor::identity(),
            conductivity: Conductivity::problem1(),
            density: 1.0,
            heat_capacity: 1.0,
            thermal_conductivity: 1.0,
            ambient_temperature: 1.0,
        }
    }
}

/// One experiment: material, initial data, boundary potential, forcing.
///
/// Temperature and displacement are zero on the whole boundary; the
/// potential equals `boundary_potential(t, .)` there.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub material: MaterialModel,
    pub initial_temperature: ScalarFn,
    pub initial_displacement: VectorFn,
    pub initial_velocity: VectorFn,
    pub boundary_potential: TimeScalarFn,
    pub body_force: TimeVectorFn,
    /// Optional volumetric heat source, used by manufactured problems.
    pub heat_source: Option<TimeScalarFn>,
    pub t_final: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("material", &self.material)
            .field("heat_source", &self.heat_source.is_some())
            .field("t_final", &self.t_final)
            .finish_non_exhaustive()
    }
}

pub fn sigma_problem1() -> Conductivity {
    Conductivity::problem1()
}

/// Unit square, `M = I`, `f = 0`, zero initial data, `phi_b = 5 (1 - x)`,
/// `A = B = [[1,1,0],[1,1,0],[0,0,1]]`, `T = 1`.
pub fn make_problem1() -> ProblemSpec {
    ProblemSpec {
        name: "p1".into(),
        material: MaterialModel::problem1(),
        initial_temperature: Arc::new(|_, _| 0.0),
        initial_displacement: Arc::new(|_, _| [0.0, 0.0]),
        initial_velocity: Arc::new(|_, _| [0.0, 0.0]),
        boundary_potential: Arc::new(|_, x, _| 5.0 * (1.0 - x)),
        body_force: Arc::new(|_, _, _| [0.0, 0.0]),
        heat_source: None,
        t_final: 1.0,
    }
}

/// Problem 1 with the viscosity scaled by `gamma`.
pub fn make_problem2(gamma: f64) -> Result<ProblemSpec> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} must be non-negative")));
    }
    let mut spec = make_problem1();
    spec.name = "p2".into();
    spec.material.viscosity = VoigtTensor::div_shear().scaled(gamma);
    Ok(spec)
}

/// Spec with every datum zero; the zero state is a fixed point.
pub fn make_zero_problem() -> ProblemSpec {
    let mut spec = make_problem1();
    spec.name = "zero".into();
    spec.boundary_potential = Arc::new(|_, _, _| 0.0);
    spec
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManufacturedKind {
    /// `theta = exp(-t) sin(pi x) sin(pi y)`, no Joule heating or coupling.
    HeatOnly,
    /// Static `u = (sin(pi x) sin(pi y), 0)` with Lamé(1, 1) elasticity.
    ElasticityOnly,
}

/// Closed-form solution of a manufactured problem.
#[derive(Clone)]
pub enum ExactSolution {
    Temperature(TimeScalarFn),
    Displacement(VectorFn),
}

pub fn make_manufactured(kind: ManufacturedKind) -> (ProblemSpec, ExactSolution) {
    let mut material = MaterialModel::problem1();
    material.expansion = CouplingTensor::zero();
    material.conductivity = Conductivity::Constant(1.0);
    material.elasticity = VoigtTensor::lame(1.0, 1.0).expect("positive moduli");
    material.viscosity = VoigtTensor::lame(1.0, 1.0).expect("positive moduli");
    let base = ProblemSpec {
        name: String::new(),
        material,
        initial_temperature: Arc::new(|_, _| 0.0),
        initial_displacement: Arc::new(|_, _| [0.0, 0.0]),
        initial_velocity: Arc::new(|_, _| [0.0, 0.0]),
        boundary_potential: Arc::new(|_, _, _| 0.0),
        body_force: Arc::new(|_, _, _| [0.0, 0.0]),
        heat_source: None,
        t_final: 1.0,
    };
    match kind {
        ManufacturedKind::HeatOnly => {
            let rho_c = base.material.density * base.material.heat_capacity;
            let k = base.material.thermal_conductivity;
            let exact = |t: f64, x: f64, y: f64| (-t).exp() * (PI * x).sin() * (PI * y).sin();
            let spec = ProblemSpec {
                name: "heat".into(),
                initial_temperature: Arc::new(move |x, y| exact(0.0, x, y)),
                heat_source: Some(Arc::new(move |t, x, y| (2.0 * PI * PI * k - rho_c) * exact(t, x, y))),
                ..base
            };
            (spec, ExactSolution::Temperature(Arc::new(exact)))
        }
        ManufacturedKind::ElasticityOnly => {
            let [[b11, _, _], [b21, _, _], [_, _, b33]] = *base.material.elasticity.entries();
            let (mu, lambda) = (b33, b21);
            debug_assert_eq!(b11, 2.0 * mu + lambda);
            let force = move |x: f64, y: f64| {
                let (sx, sy, cx, cy) = ((PI * x).sin(), (PI * y).sin(), (PI * x).cos(), (PI * y).cos());
                [
                    (3.0 * mu + lambda) * PI * PI * sx * sy,
                    -(mu + lambda) * PI * PI * cx * cy,
                ]
            };
            let spec = ProblemSpec {
                name: "elastic".into(),
                body_force: Arc::new(move |_, x, y| force(x, y)),
                ..base
            };
            let exact = |x: f64, y: f64| [(PI * x).sin() * (PI * y).sin(), 0.0];
            (spec, ExactSolution::Displacement(Arc::new(exact)))
        }
    }
}

/// Outcome of [`validate_assumptions`]; hard failures are returned as errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub viscosity_eigenvalues: [f64; 3],
    pub elasticity_eigenvalues: [f64; 3],
    pub sigma_bounds: (f64, f64),
    pub sigma_sampled: (f64, f64),
    pub sigma_derivative_bound: f64,
    pub warnings: Vec<String>,
}

/// Sampling window for the conductivity bound check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRange {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

impl Default for SampleRange {
    fn default() -> Self {
        SampleRange {
            lo: -1e6,
            hi: 1e6,
            samples: 20_001,
        }
    }
}

const SEMIDEFINITE_TOL: f64 = 1e-12;

/// Checks tensor symmetry, coercivity (semidefinite tensors produce a
/// warning) and the conductivity bounds on sampled temperatures.
pub fn validate_assumptions(spec: &ProblemSpec, range: SampleRange) -> Result<ValidationReport> {
    let mat = &spec.material;
    let mut warnings = Vec::new();

    let mut eig = |name: &str, t: &VoigtTensor| -> Result<[f64; 3]> {
        VoigtTensor::new(*t.entries())?;
        let ev = t.eigenvalues();
        let scale = ev[2].abs().max(f64::MIN_POSITIVE);
        if ev[0] < -SEMIDEFINITE_TOL * scale {
            warnings.push(format!(
                "{name} tensor is indefinite: smallest eigenvalue {:.6e}",
                ev[0]
            ));
        } else if ev[0] <= SEMIDEFINITE_TOL * scale {
            warnings.push(format!(
                "{name} tensor is only positive semidefinite: smallest eigenvalue {:.3e}",
                ev[0]
            ));
        }
        Ok(ev)
    };
    let viscosity_eigenvalues = eig("viscosity", &mat.viscosity)?;
    let elasticity_eigenvalues = eig("elasticity", &mat.elasticity)?;
    CouplingTensor::new(*mat.expansion.entries())?;

    for (name, v) in [
        ("density", mat.density),
        ("heat capacity", mat.heat_capacity),
        ("thermal conductivity", mat.thermal_conductivity),
    ] {
        if !(v > 0.0) {
            return Err(Error::Assumption(format!("{name} = {v} must be positive")));
        }
    }
    if !(spec.t_final > 0.0) {
        return Err(Error::Assumption(format!(
            "final time {} must be positive",
            spec.t_final
        )));
    }

    let sigma = mat.conductivity;
    let (smin, smax) = sigma.bounds();
    if !(smin > 0.0) {
        return Err(Error::Coercivity(format!(
            "conductivity {sigma} has lower bound {smin}; it must be bounded below by a positive constant"
        )));
    }
    let mut sampled = (f64::INFINITY, f64::NEG_INFINITY);
    let n = range.samples.max(2);
    let dense = (0..=2000).map(|i| -10.0 + 20.0 * i as f64 / 2000.0);
    let wide = (0..n).map(|i| range.lo + (range.hi - range.lo) * i as f64 / (n - 1) as f64);
    for theta in wide.chain(dense.filter(|t| (range.lo..=range.hi).contains(t))) {
        let s = sigma.eval(theta);
        let slack = 1e-12 * smax.abs().max(1.0);
        if !(s >= smin - slack && s <= smax + slack) {
            return Err(Error::Coercivity(format!(
                "conductivity {sigma} evaluates to {s} at theta = {theta}, outside [{smin}, {smax}]"
            )));
        }
        sampled = (sampled.0.min(s), sampled.1.max(s));
    }

    let (ia, ib) = (mat.viscosity.entries(), mat.elasticity.entries());
    if ia.iter().flatten().all(|&v| v == 0.0) {
        warnings.push("viscosity tensor is zero".into());
    }
    if ib.iter().flatten().all(|&v| v == 0.0) {
        warnings.push("elasticity tensor is zero".into());
    }

    Ok(ValidationReport {
        viscosity_eigenvalues,
        elasticity_eigenvalues,
        sigma_bounds: (smin, smax),
        sigma_sampled: sampled,
        sigma_derivative_bound: sigma.derivative_bound(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem1_conductivity() {
        let s = sigma_problem1();
        assert_eq!(s.eval(2.0), 2.5);
        // 2.5 + atan(10) to 30 digits: 3.97112767430373459185...
        assert!((s.eval(0.0) - 3.971_127_674_303_734_6).abs() < 1e-15);
        assert_eq!(s.derivative_bound(), 5.0);
        let (lo, hi) = s.bounds();
        assert!((lo - 0.929_203_673_205_103_4).abs() < 1e-15);
        assert!((hi - 4.070_796_326_794_896_6).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for i in -1000..=1000 {
            let v = s.eval(i as f64 * 0.01);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn problem1_data() {
        let p = make_problem1();
        assert_eq!(p.material.expansion, CouplingTensor::identity());
        for &(t, y) in &[(0.0, 0.0), (0.3, 0.5), (1.0, 1.0)] {
            assert_eq!((p.boundary_potential)(t, 0.0, y), 5.0);
        }
        for &(x, y) in &[(0.0, 0.3), (1.0, 0.2), (0.5, 0.0), (0.4, 1.0)] {
            assert_eq!((p.initial_temperature)(x, y), 0.0);
        }
        assert_eq!(p.t_final, 1.0);
    }

    #[test]
    fn problem2_scaling() {
        let p1 = make_problem1();
        let p2 = make_problem2(1.0).unwrap();
        assert_eq!(p1.material, p2.material);
        assert_eq!(p1.t_final, p2.t_final);
        for &(t, x, y) in &[(0.0, 0.1, 0.2), (0.5, 0.7, 0.9)] {
            assert_eq!((p1.boundary_potential)(t, x, y), (p2.boundary_potential)(t, x, y));
            assert_eq!((p1.body_force)(t, x, y), (p2.body_force)(t, x, y));
        }
        let p = make_problem2(1e-3).unwrap();
        let e = p.material.viscosity.entries();
        assert_eq!(e, &[[1e-3, 1e-3, 0.0], [1e-3, 1e-3, 0.0], [0.0, 0.0, 1e-3]]);
        assert!(make_problem2(0.0).is_ok());
        assert!(make_problem2(-1.0).is_err());
    }

    #[test]
    fn heat_source_value() {
        let (spec, exact) = make_manufactured(ManufacturedKind::HeatOnly);
        let f = spec.heat_source.unwrap();
        // (-1 + 2 pi^2) at the center, t = 0
        assert!((f(0.0, 0.5, 0.5) - 18.739_208_802_178_716).abs() < 1e-12);
        let ExactSolution::Temperature(th) = exact else {
            panic!()
        };
        for s in [0.0, 0.25, 1.0] {
            assert!(th(0.3, s, 0.0).abs() < 1e-15 && th(0.3, 1.0, s).abs() < 1e-15);
        }
    }

    #[test]
    fn elastic_force_matches_finite_differences() {
        let (spec, exact) = make_manufactured(ManufacturedKind::ElasticityOnly);
        let ExactSolution::Displacement(u) = exact else {
            panic!()
        };
        let (mu, lambda) = (1.0, 1.0);
        // stress from the exact field by central differences, then -div
        let h = 1e-4;
        let stress = |x: f64, y: f64| -> [f64; 3] {
            let ux = |x, y| u(x, y)[0];
            let uy = |x, y| u(x, y)[1];
            let e11 = (ux(x + h, y) - ux(x - h, y)) / (2.0 * h);
            let e22 = (uy(x, y + h) - uy(x, y - h)) / (2.0 * h);
            let g12 = (ux(x, y + h) - ux(x, y - h)) / (2.0 * h) + (uy(x + h, y) - uy(x - h, y)) / (2.0 * h);
            let tr = e11 + e22;
            [2.0 * mu * e11 + lambda * tr, 2.0 * mu * e22 + lambda * tr, mu * g12]
        };
        for &(x, y) in &[(0.5, 0.5), (0.3, 0.8), (0.1, 0.45)] {
            let s11x = (stress(x + h, y)[0] - stress(x - h, y)[0]) / (2.0 * h);
            let s12y = (stress(x, y + h)[2] - stress(x, y - h)[2]) / (2.0 * h);
            let s12x = (stress(x + h, y)[2] - stress(x - h, y)[2]) / (2.0 * h);
            let s22y = (stress(x, y + h)[1] - stress(x, y - h)[1]) / (2.0 * h);
            let f = (spec.body_force)(0.0, x, y);
            assert!((f[0] + s11x + s12y).abs() < 1e-5, "{f:?}");
            assert!((f[1] + s12x + s22y).abs() < 1e-5, "{f:?}");
        }
        let f = (spec.body_force)(0.0, 0.5, 0.5);
        assert!((f[0] - 4.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn validation_of_presets() {
        let r = validate_assumptions(&make_problem1(), SampleRange::default()).unwrap();
        assert!(r.elasticity_eigenvalues[0].abs() < 1e-12);
        assert!(r
            .warnings
            .iter()
            .any(|w| w.contains("elasticity") && w.contains("semidefinite")));
        assert!(r.sigma_sampled.0 >= 0.9292 && r.sigma_sampled.1 <= 4.0708);

        let mut spec = make_problem1();
        spec.material.viscosity = VoigtTensor::lame(1.0, 1.0).unwrap();
        spec.material.elasticity = VoigtTensor::lame(1.0, 1.0).unwrap();
        let r = validate_assumptions(&spec, SampleRange::default()).unwrap();
        assert!(r.warnings.is_empty());
        assert!(r.elasticity_eigenvalues.iter().all(|&e| e > 0.0));

        spec.material.conductivity = Conductivity::Constant(0.0);
        assert!(matches!(
            validate_assumptions(&spec, SampleRange::default()),
            Err(Error::Coercivity(_))
        ));

        for kind in [ManufacturedKind::HeatOnly, ManufacturedKind::ElasticityOnly] {
            let r = validate_assumptions(&make_manufactured(kind).0, SampleRange::default()).unwrap();
            assert!(r.warnings.is_empty());
        }
        let r = validate_assumptions(&make_problem2(0.1).unwrap(), SampleRange::default()).unwrap();
        assert!(r.warnings.len() <= 2);
    }

    #[test]
    fn div_shear_null_vector() {
        let ev = VoigtTensor::div_shear().eigenvalues();
        assert!(ev[0].abs() < 1e-14);
        assert!((ev[1] - 1.0).abs() < 1e-14 && (ev[2] - 2.0).abs() < 1e-14);
        let t = VoigtTensor::div_shear();
        let e = t.entries();
        let v = [1.0, -1.0, 0.0];
        for row in e {
            assert_eq!(row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn silicon_law_within_bounds() {
        let s = Conductivity::Silicon { ambient: 293.15 };
        let (lo, hi) = s.bounds();
        for i in 0..1000 {
            let v = s.eval(-200.0 + i as f64);
            assert!(v >= lo && v <= hi);
        }
    }
}
