//! Problem selection: presets, TOML problem files and command line overrides.
//!
//! File schema (every key optional):
//!
//! ```toml
//! preset = "p1"            # start from a preset instead of the p1 defaults
//! gamma = 1.0              # viscosity scale
//! t_final = 1.0
//! potential = 5.0          # boundary potential is potential * (1 - x)
//!
//! [conductivity]
//! law = "arctan"           # or "constant" (value) / "silicon" (ambient)
//! base = 2.5
//! slope = 5.0
//! shift = 10.0
//!
//! [viscosity]              # one of: voigt = [[..],[..],[..]]
//! voigt = [[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
//!
//! [elasticity]             # ... or mu/lambda, or young/poisson
//! mu = 1.0
//! lambda = 1.0
//!
//! [coefficients]
//! density = 1.0
//! heat_capacity = 1.0
//! thermal_conductivity = 1.0
//! ambient_temperature = 1.0
//! expansion = [[1.0, 0.0], [0.0, 1.0]]
//! ```

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use thermistor_fem::model::{make_manufactured, ManufacturedKind};
use thermistor_fem::{make_problem1, make_problem2, Conductivity, CouplingTensor, ProblemSpec, VoigtTensor};

use crate::args::{Preset, ProblemArgs};
use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub preset: Option<String>,
    pub gamma: Option<f64>,
    pub t_final: Option<f64>,
    pub potential: Option<f64>,
    pub conductivity: Option<ConductivityFile>,
    pub viscosity: Option<TensorFile>,
    pub elasticity: Option<TensorFile>,
    pub coefficients: Option<CoefficientsFile>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConductivityFile {
    Constant { value: f64 },
    Arctan { base: f64, slope: f64, shift: f64 },
    Silicon { ambient: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum TensorFile {
    Voigt { voigt: [[f64; 3]; 3] },
    Lame { mu: f64, lambda: f64 },
    Young { young: f64, poisson: f64 },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsFile {
    pub density: Option<f64>,
    pub heat_capacity: Option<f64>,
    pub thermal_conductivity: Option<f64>,
    pub ambient_temperature: Option<f64>,
    pub expansion: Option<[[f64; 2]; 2]>,
}

impl TensorFile {
    fn tensor(&self) -> Result<VoigtTensor, CliError> {
        let t = match *self {
            TensorFile::Voigt { voigt } => VoigtTensor::new(voigt),
            TensorFile::Lame { mu, lambda } => VoigtTensor::lame(mu, lambda),
            TensorFile::Young { young, poisson } => {
                let (mu, lambda) = VoigtTensor::lame_parameters(young, poisson);
                VoigtTensor::lame(mu, lambda)
            }
        };
        t.map_err(|e| CliError::Usage(format!("config: {e}")))
    }
}

pub fn parse_problem_file(text: &str) -> Result<ProblemFile, CliError> {
    toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
}

pub fn load_problem_file(path: &Path) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_problem_file(&text)
}

fn parse_preset(name: &str) -> Result<Preset, CliError> {
    match name {
        "p1" => Ok(Preset::P1),
        "p2" => Ok(Preset::P2),
        "heat" => Ok(Preset::Heat),
        "elastic" => Ok(Preset::Elastic),
        other => Err(CliError::Usage(format!("unknown preset '{other}'"))),
    }
}

/// The problem to solve, plus the preset that determines study defaults.
pub struct ResolvedProblem {
    pub spec: ProblemSpec,
    pub preset: Preset,
    pub gamma: f64,
    /// Lines describing where the problem came from, for the manifest.
    pub provenance: Vec<String>,
}

pub fn preset_spec(preset: Preset, gamma: f64) -> Result<ProblemSpec, CliError> {
    match preset {
        Preset::P1 | Preset::P2 => make_problem2(gamma)
            .map(|mut s| {
                if preset == Preset::P1 {
                    s.name = make_problem1().name;
                }
                s
            })
            .map_err(|e| CliError::Usage(e.to_string())),
        Preset::Heat | Preset::Elastic => {
            let kind = if preset == Preset::Heat {
                ManufacturedKind::HeatOnly
            } else {
                ManufacturedKind::ElasticityOnly
            };
            let (mut spec, _) = make_manufactured(kind);
            spec.material.viscosity = spec.material.viscosity.scaled(gamma);
            Ok(spec)
        }
    }
}

/// Resolves `--problem`, `--config`, `--gamma` and `--t-final`. A preset
/// named on the command line wins over the file; a preset named inside the
/// file is the base that the other file keys modify.
pub fn resolve_problem(args: &ProblemArgs) -> Result<ResolvedProblem, CliError> {
    let file = match &args.config {
        Some(path) => Some(load_problem_file(path)?),
        None => None,
    };
    let mut provenance = Vec::new();
    let gamma = args.gamma.or(file.as_ref().and_then(|f| f.gamma)).unwrap_or(1.0);
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(CliError::Usage(format!(
            "gamma = {gamma} must be a finite non-negative number"
        )));
    }

    let (preset, mut spec) = if let Some(preset) = args.problem {
        if let Some(path) = &args.config {
            provenance.push(format!(
                "config_ignored = {} (preset given on the command line)",
                path.display()
            ));
        }
        (preset, preset_spec(preset, gamma)?)
    } else if let Some(file) = file {
        let preset = match &file.preset {
            Some(name) => parse_preset(name)?,
            None => Preset::P1,
        };
        let mut spec = preset_spec(preset, 1.0)?;
        if let Some(path) = &args.config {
            provenance.push(format!("config = {}", path.display()));
        }
        apply_file(&mut spec, &file)?;
        spec.material.viscosity = spec.material.viscosity.scaled(gamma);
        spec.name = format!("{}-custom", spec.name);
        (preset, spec)
    } else {
        (Preset::P1, preset_spec(Preset::P1, gamma)?)
    };
    if let Some(t) = args.t_final {
        spec.t_final = t;
    }
    if !(spec.t_final > 0.0) || !spec.t_final.is_finite() {
        return Err(CliError::Usage(format!("final time {} must be positive", spec.t_final)));
    }
    Ok(ResolvedProblem {
        spec,
        preset,
        gamma,
        provenance,
    })
}

fn apply_file(spec: &mut ProblemSpec, file: &ProblemFile) -> Result<(), CliError> {
    let mat = &mut spec.material;
    if let Some(c) = &file.conductivity {
        mat.conductivity = match *c {
            ConductivityFile::Constant { value } => Conductivity::Constant(value),
            ConductivityFile::Arctan { base, slope, shift } => Conductivity::Arctan { base, slope, shift },
            ConductivityFile::Silicon { ambient } => Conductivity::Silicon { ambient },
        };
    }
    if let Some(t) = &file.viscosity {
        mat.viscosity = t.tensor()?;
    }
    if let Some(t) = &file.elasticity {
        mat.elasticity = t.tensor()?;
    }
    if let Some(c) = &file.coefficients {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut mat.density, c.density);
        set(&mut mat.heat_capacity, c.heat_capacity);
        set(&mut mat.thermal_conductivity, c.thermal_conductivity);
        set(&mut mat.ambient_temperature, c.ambient_temperature);
        if let Some(m) = c.expansion {
            mat.expansion = CouplingTensor::new(m).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        }
    }
    if let Some(v) = file.potential {
        spec.boundary_potential = Arc::new(move |_, x, _| v * (1.0 - x));
    }
    if let Some(t) = file.t_final {
        spec.t_final = t;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(problem: Option<Preset>, gamma: Option<f64>) -> ProblemArgs {
        ProblemArgs {
            problem,
            config: None,
            gamma,
            t_final: None,
        }
    }

    #[test]
    fn full_schema_parses() {
        let f = parse_problem_file(
            r#"
            preset = "p1"
            gamma = 0.5
            t_final = 2.0
            potential = 3.0
            [conductivity]
            law = "silicon"
            ambient = 300.0
            [viscosity]
            voigt = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 0.5]]
            [elasticity]
            young = 150e7
            poisson = 0.01
            [coefficients]
            density = 2.0
            expansion = [[1.0, 0.0], [0.0, 2.0]]
            "#,
        )
        .unwrap();
        let mut spec = make_problem1();
        apply_file(&mut spec, &f).unwrap();
        assert_eq!(spec.material.conductivity, Conductivity::Silicon { ambient: 300.0 });
        assert_eq!(spec.material.viscosity.entries()[2][2], 0.5);
        assert_eq!(spec.material.density, 2.0);
        assert_eq!(spec.material.expansion.entries()[1][1], 2.0);
        assert_eq!((spec.boundary_potential)(0.0, 0.0, 0.3), 3.0);
        assert_eq!(spec.t_final, 2.0);
        let mu = spec.material.elasticity.entries()[2][2];
        assert!((mu - 742_574_257.425_742_6).abs() < 1e-3);
    }

    #[test]
    fn unknown_keys_and_laws_are_rejected() {
        assert!(parse_problem_file("colour = 1").is_err());
        assert!(parse_problem_file("[conductivity]\nlaw = \"linear\"").is_err());
        assert!(
            parse_problem_file("[viscosity]\nvoigt = [[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]")
                .and_then(|f| f.viscosity.unwrap().tensor().map(|_| ()))
                .is_err()
        );
    }

    #[test]
    fn presets_and_gamma() {
        let p2 = resolve_problem(&args(Some(Preset::P2), Some(1e-2))).unwrap();
        assert_eq!(p2.spec.material.viscosity.entries()[0], [1e-2, 1e-2, 0.0]);
        let p1 = resolve_problem(&args(None, None)).unwrap();
        assert_eq!(p1.spec.name, "p1");
        assert_eq!(p1.spec.material.viscosity, VoigtTensor::div_shear());
        assert!(resolve_problem(&args(Some(Preset::P2), Some(-1.0))).is_err());
    }

    #[test]
    fn command_line_preset_overrides_file() {
        let dir = std::env::temp_dir().join(format!("thermistor-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.toml");
        std::fs::write(
            &path,
            "t_final = 3.0\n[conductivity]\nlaw = \"constant\"\nvalue = 2.0\n",
        )
        .unwrap();
        let from_file = resolve_problem(&ProblemArgs {
            config: Some(path.clone()),
            ..args(None, None)
        })
        .unwrap();
        assert_eq!(from_file.spec.material.conductivity, Conductivity::Constant(2.0));
        assert_eq!(from_file.spec.t_final, 3.0);
        let preset = resolve_problem(&ProblemArgs {
            config: Some(path),
            ..args(Some(Preset::P1), None)
        })
        .unwrap();
        assert_eq!(preset.spec.material.conductivity, Conductivity::problem1());
        assert_eq!(preset.spec.t_final, 1.0);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
