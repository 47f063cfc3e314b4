//! Scenario resolution: defaults, presets, config file and overrides are
//! merged into one key map, then validated into typed settings.

use std::fmt::Write as _;
use std::path::PathBuf;

use gpe_semiclassical::{
    stationary_sigma, FamilyShape, Grid, InitialConditions, KernelForm, PhysParams, QuadratureSpec, TrapProfile,
};
use toml::Value;

use crate::config::{eval_number, parse_config, ConfigMap};
use crate::error::{CliError, Result};

/// Every accepted key with its default, as TOML literal text.
pub const KEYS: &[(&str, &str)] = &[
    ("params.m", "1.0"),
    ("params.hbar", "1.0"),
    ("params.g", "0.0"),
    ("trap.kind", "\"constant\""),
    ("trap.omega0", "1.0"),
    ("trap.rate", "0.0"),
    ("trap.epsilon", "0.0"),
    ("trap.nu", "1.0"),
    ("ic.x0", "1.0"),
    ("ic.v0", "0.0"),
    ("ic.a0", "\"sigma_star\""),
    ("ic.b0", "0.0"),
    ("time.t_final", "\"pi\""),
    ("time.outputs", "[0.5, 1.0, 2.0, \"pi\"]"),
    ("ode.tol", "1e-10"),
    ("grid.half_width", "12.0"),
    ("grid.n", "1024"),
    ("split.dt", "1e-4"),
    ("kernel.t", "\"pi/2\""),
    ("kernel.half_width", "10.0"),
    ("kernel.n", "256"),
    ("kernel.v_max", "\"auto\""),
    ("kernel.nodes", "2048"),
    ("kernel.panels", "128"),
    ("kernel.form", "\"derived\""),
    ("kernel.a0", "\"sigma_star\""),
    ("kernel.b0", "0.0"),
    ("kernel.meta_threshold", "1e-6"),
    ("verify.n", "4097"),
    ("verify.dt", "1e-3"),
    ("verify.causality_times", "[0.1, 0.03, 0.01, 0.003]"),
    ("verify.completeness_t", "1.0"),
    ("verify.probes", "[-0.5, 0.3, 1.0]"),
    ("verify.probe_half_width", "12.0"),
    ("verify.probe_n", "601"),
    ("verify.test_center", "0.3"),
    ("compare.g_values", "[]"),
    ("compare.kernel", "true"),
    ("output.dir", "\"out\""),
];

pub const PRESETS: &[(&str, &str)] = &[
    ("ho-coherent", include_str!("../presets/ho-coherent.toml")),
    ("breather", include_str!("../presets/breather.toml")),
    ("gp-weak", include_str!("../presets/gp-weak.toml")),
    ("ramp", include_str!("../presets/ramp.toml")),
    ("driven", include_str!("../presets/driven.toml")),
];

pub fn preset(name: &str) -> Result<ConfigMap> {
    let text = PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        CliError::config(format!("unknown preset `{name}` (known: {})", names.join(", ")))
    })?;
    parse_config(text)
}

pub fn defaults() -> ConfigMap {
    KEYS.iter()
        .map(|(k, lit)| {
            let v = format!("v = {lit}").parse::<toml::Table>().expect("default literal")["v"].clone();
            (k.to_string(), v)
        })
        .collect()
}

/// Layers `over` onto `base`, rejecting unknown keys.
pub fn merge(base: &mut ConfigMap, over: ConfigMap) -> Result<()> {
    for (k, v) in over {
        if !KEYS.iter().any(|(name, _)| *name == k) {
            return Err(CliError::config(format!("unknown key `{k}`")));
        }
        base.insert(k, v);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct KernelSettings {
    pub grid: Grid,
    pub t: f64,
    /// `None` selects a window from the packet width and time.
    pub v_max: Option<f64>,
    pub nodes: usize,
    pub panels: usize,
    pub shape: FamilyShape,
    pub form: KernelForm,
    pub meta_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct VerifySettings {
    pub grid: Grid,
    pub dt: f64,
    pub causality_times: Vec<f64>,
    pub completeness_t: f64,
    pub probes: Vec<f64>,
    pub probe_grid: Grid,
    pub test_center: f64,
}

#[derive(Debug, Clone)]
pub struct CompareSettings {
    pub g_values: Vec<f64>,
    pub kernel: bool,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: PhysParams,
    pub profile: TrapProfile,
    pub ic: InitialConditions,
    pub sigma_star: f64,
    pub t_final: f64,
    pub outputs: Vec<f64>,
    pub ode_tol: f64,
    pub grid: Grid,
    pub split_dt: f64,
    pub kernel: KernelSettings,
    pub verify: VerifySettings,
    pub compare: CompareSettings,
    pub out_dir: PathBuf,
    resolved: String,
}

struct Reader<'a> {
    map: &'a ConfigMap,
    sigma_star: Option<f64>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> &Value {
        &self.map[key]
    }

    fn num(&self, key: &str) -> Result<f64> {
        eval_number(self.raw(key), self.sigma_star).map_err(|e| CliError::config(format!("{key}: {e}")))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        let Value::Array(items) = self.raw(key) else {
            return Err(CliError::config(format!("{key}: expected a list")));
        };
        items
            .iter()
            .map(|v| eval_number(v, self.sigma_star).map_err(|e| CliError::config(format!("{key}: {e}"))))
            .collect()
    }

    fn count(&self, key: &str) -> Result<usize> {
        match self.raw(key) {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            other => Err(CliError::config(format!("{key}: expected a non-negative integer, got {other}"))),
        }
    }

    fn text(&self, key: &str) -> Result<&str> {
        self.raw(key).as_str().ok_or_else(|| CliError::config(format!("{key}: expected a string")))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        self.raw(key).as_bool().ok_or_else(|| CliError::config(format!("{key}: expected true or false")))
    }

    fn is_auto(&self, key: &str) -> bool {
        self.raw(key).as_str() == Some("auto")
    }
}

fn ascending_positive(key: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|t| !(*t > 0.0)) || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::config(format!("{key}: times must be > 0 and strictly ascending")));
    }
    Ok(())
}

impl Scenario {
    /// Builds a scenario from a fully merged map (see [`defaults`]).
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        if let Some((k, _)) = KEYS.iter().find(|(k, _)| !map.contains_key(*k)) {
            return Err(CliError::config(format!("missing key `{k}`")));
        }
        let mut r = Reader { map, sigma_star: None };
        let params = PhysParams::new(r.num("params.m")?, r.num("params.hbar")?, r.num("params.g")?)?;
        let omega0 = r.num("trap.omega0")?;
        let profile = match r.text("trap.kind")? {
            "constant" => TrapProfile::constant(omega0)?,
            "ramp" => TrapProfile::linear_ramp(omega0, r.num("trap.rate")?)?,
            "sinusoidal" => TrapProfile::sinusoidal(omega0, r.num("trap.epsilon")?, r.num("trap.nu")?)?,
            other => {
                return Err(CliError::config(format!(
                    "trap.kind: expected constant, ramp or sinusoidal, got `{other}`"
                )))
            }
        };
        let sigma_star = stationary_sigma(&params, omega0)?;
        r.sigma_star = Some(sigma_star);

        let ic = InitialConditions::new(r.num("ic.x0")?, r.num("ic.v0")?, r.num("ic.a0")?, r.num("ic.b0")?)?;
        let t_final = r.num("time.t_final")?;
        if !(t_final > 0.0) {
            return Err(CliError::config(format!("time.t_final: must be > 0, got {t_final}")));
        }
        let outputs = r.list("time.outputs")?;
        ascending_positive("time.outputs", &outputs)?;
        if outputs.last().is_some_and(|t| *t > t_final) {
            return Err(CliError::config("time.outputs: output times must not exceed time.t_final"));
        }

        let ode_tol = r.num("ode.tol")?;
        let grid = Grid::symmetric(r.num("grid.half_width")?, r.count("grid.n")?)?;
        let split_dt = r.num("split.dt")?;
        if !(split_dt > 0.0) {
            return Err(CliError::config(format!("split.dt: must be > 0, got {split_dt}")));
        }

        let kernel_t = r.num("kernel.t")?;
        if !(kernel_t > 0.0) {
            return Err(CliError::config(format!("kernel.t: must be > 0, got {kernel_t}")));
        }
        let v_max = if r.is_auto("kernel.v_max") { None } else { Some(r.num("kernel.v_max")?) };
        let form = r
            .text("kernel.form")?
            .parse::<KernelForm>()
            .map_err(|_| CliError::config("kernel.form: expected derived or printed"))?;
        let kernel = KernelSettings {
            grid: Grid::symmetric(r.num("kernel.half_width")?, r.count("kernel.n")?)?,
            t: kernel_t,
            v_max,
            nodes: r.count("kernel.nodes")?,
            panels: r.count("kernel.panels")?,
            shape: FamilyShape::new(r.num("kernel.a0")?, r.num("kernel.b0")?)?,
            form,
            meta_threshold: r.num("kernel.meta_threshold")?,
        };

        let verify = VerifySettings {
            grid: Grid::symmetric(r.num("grid.half_width")?, r.count("verify.n")?)?,
            dt: r.num("verify.dt")?,
            causality_times: r.list("verify.causality_times")?,
            completeness_t: r.num("verify.completeness_t")?,
            probes: r.list("verify.probes")?,
            probe_grid: Grid::symmetric(r.num("verify.probe_half_width")?, r.count("verify.probe_n")?)?,
            test_center: r.num("verify.test_center")?,
        };
        if !(verify.dt > 0.0) {
            return Err(CliError::config(format!("verify.dt: must be > 0, got {}", verify.dt)));
        }
        if outputs.first().is_some_and(|t| *t <= 0.5 * verify.dt) {
            return Err(CliError::config("verify.dt: must be below twice the first output time"));
        }
        if verify.causality_times.iter().any(|t| !(*t > 0.0)) {
            return Err(CliError::config("verify.causality_times: times must be > 0"));
        }
        if !(verify.completeness_t >= 0.0) {
            return Err(CliError::config("verify.completeness_t: must be >= 0"));
        }

        let compare = CompareSettings { g_values: r.list("compare.g_values")?, kernel: r.flag("compare.kernel")? };
        let out_dir = PathBuf::from(r.text("output.dir")?);

        let mut sc = Scenario {
            params,
            profile,
            ic,
            sigma_star,
            t_final,
            outputs,
            ode_tol,
            grid,
            split_dt,
            kernel,
            verify,
            compare,
            out_dir,
            resolved: String::new(),
        };
        sc.resolved = render(map, &sc);
        // surface quadrature problems at load time
        sc.quad_for(sc.kernel.t)?;
        Ok(sc)
    }

    /// Full resolved configuration, one `key = value` per line.
    pub fn resolved(&self) -> &str {
        &self.resolved
    }

    /// Quadrature over v0 for a kernel at time `t`.
    pub fn quad_for(&self, t: f64) -> Result<QuadratureSpec> {
        let v_max = self.kernel.v_max.unwrap_or_else(|| {
            QuadratureSpec::default_v_max(
                self.params.m(),
                self.params.hbar(),
                self.kernel.shape.a0,
                self.profile.omega0(),
                t,
            )
        });
        Ok(QuadratureSpec::new(v_max, self.kernel.nodes, self.kernel.panels)?)
    }
}

/// TOML literal text, with floats in shortest round-trip form.
fn literal(v: &Value) -> String {
    match v {
        Value::Float(f) if f.is_nan() => "nan".into(),
        Value::Float(f) => format!("{f:?}"),
        Value::Array(items) => format!("[{}]", items.iter().map(literal).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

fn render(map: &ConfigMap, sc: &Scenario) -> String {
    let mut s = String::new();
    for (k, _) in KEYS {
        let _ = writeln!(s, "{k} = {}", literal(&map[*k]));
    }
    let _ = writeln!(s, "# sigma_star = {:.16e}", sc.sigma_star);
    let _ = writeln!(s, "# resolved ic.a0 = {:.16e}", sc.ic.a0);
    s
}
