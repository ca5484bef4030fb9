//! Flat key/value run configuration.
//!
//! Format: one `key = value` per line, `#` starts a comment, keys use dotted
//! section names (`stepper.dt`). Parsing is strict: unknown keys are errors
//! with a nearest-key suggestion, and echoing a parsed config reproduces it
//! exactly (round-trip property). The full key table with defaults lives in
//! [`KEY_TABLE`] and is what `echo` prints.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use oldroyd2d::diag::SplittingProfile;
use oldroyd2d::{
    DiagnosticsConfig, GeneratorKind, GeneratorSpec, GridSpec, ModelParams, RotationMode, Scheme,
    StepperConfig,
};

#[derive(Debug, Clone)]
pub struct Outputs {
    pub dir: PathBuf,
    pub csv: bool,
    pub snapshots: Vec<f64>,
    pub seed: u64,
}

/// Optional tolerances; a check runs only when its key is set.
#[derive(Debug, Clone, Default)]
pub struct Checks {
    pub tau_identity_tol: Option<f64>,
    pub lp_margin_tol: Option<f64>,
    pub energy_residual_tol: Option<f64>,
    pub monotone_tol: Option<f64>,
    pub fit_l2: Option<(f64, f64)>,
    pub fit_grad: Option<(f64, f64)>,
    pub r2_min: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: ModelParams,
    pub stepper: StepperConfig,
    pub initial: GeneratorSpec,
    /// Optional second generator superposed onto the first.
    pub initial2: Option<GeneratorSpec>,
    pub diag: DiagnosticsConfig,
    pub cadence: f64,
    pub fit_window: Option<(f64, f64)>,
    pub outputs: Outputs,
    pub checks: Checks,
}

/// `(key, default)`; an empty default marks either "required" (listed in
/// `REQUIRED`) or "disabled until set".
pub const KEY_TABLE: &[(&str, &str)] = &[
    ("grid.n", ""),
    ("grid.length", ""),
    ("grid.dealias_fraction", "0.6666666666666666"),
    ("model.rotation", "full"),
    ("model.a", "0.0"),
    ("model.mu", "1.0"),
    ("model.nu", "0.0"),
    ("model.alpha", "1.0"),
    ("model.b", "0.0"),
    ("stepper.dt", ""),
    ("stepper.scheme", "if_rk4"),
    ("stepper.t_end", ""),
    ("stepper.cfl_safety", "0.5"),
    ("stepper.adaptive", "false"),
    ("stepper.blowup_factor", "100000000.0"),
    ("initial.name", ""),
    ("initial.amplitude", "1.0"),
    ("initial.width", "0.0"),
    ("initial.mode", "1,0"),
    ("initial.epsilon", "1.0"),
    ("initial2.name", ""),
    ("initial2.amplitude", "1.0"),
    ("initial2.width", "0.0"),
    ("initial2.mode", "1,0"),
    ("initial2.epsilon", "1.0"),
    ("diagnostics.cadence", "0.1"),
    ("diagnostics.eta", "0.125"),
    ("diagnostics.c2", "100.0"),
    ("diagnostics.profile", "power:2"),
    ("diagnostics.p_list", "2,4,inf"),
    ("diagnostics.sigma_list", "1"),
    ("diagnostics.b0_every", "0"),
    ("diagnostics.fit_window", ""),
    ("outputs.dir", "out"),
    ("outputs.csv", "true"),
    ("outputs.snapshots", ""),
    ("outputs.seed", "0"),
    ("checks.tau_identity_tol", ""),
    ("checks.lp_margin_tol", ""),
    ("checks.energy_residual_tol", ""),
    ("checks.monotone_tol", ""),
    ("checks.fit_l2", ""),
    ("checks.fit_grad", ""),
    ("checks.r2_min", "0.95"),
];

const REQUIRED: &[&str] = &[
    "grid.n",
    "grid.length",
    "stepper.dt",
    "stepper.t_end",
    "initial.name",
];

fn levenshtein(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = if ca == cb { prev } else { prev + 1 };
            prev = row[j + 1];
            row[j + 1] = cost.min(row[j] + 1).min(prev + 1);
        }
    }
    row[b.len()]
}

fn nearest_key(unknown: &str) -> &'static str {
    KEY_TABLE
        .iter()
        .min_by_key(|(k, _)| {
            // match against the full key and against the part after the dot,
            // so a bare "dt" still points at "stepper.dt"
            let tail = k.rsplit('.').next().unwrap();
            levenshtein(unknown, k).min(levenshtein(unknown, tail) + 1)
        })
        .unwrap()
        .0
}

/// Raw key/value lines with consumption tracking, so anything left over at
/// the end is an unknown key.
struct Raw {
    entries: BTreeMap<String, String>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("line {}: expected 'key = value'", lineno + 1));
            };
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(format!("line {}: duplicate key '{key}'", lineno + 1));
            }
        }
        Ok(Raw { entries })
    }

    /// Effective value: explicit entry, else the table default.
    fn get(&mut self, key: &str) -> String {
        let default = KEY_TABLE
            .iter()
            .find(|(k, _)| *k == key)
            .unwrap_or_else(|| panic!("key '{key}' missing from KEY_TABLE"))
            .1;
        self.entries
            .remove(key)
            .unwrap_or_else(|| default.to_string())
    }

    fn finish(self) -> Result<(), String> {
        if let Some((key, _)) = self.entries.into_iter().next() {
            return Err(format!(
                "unknown key '{key}'; nearest valid key is '{}'",
                nearest_key(&key)
            ));
        }
        Ok(())
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, String> {
    match v {
        "inf" => Ok(f64::INFINITY),
        _ => v
            .parse()
            .map_err(|_| format!("key {key}: expected a number, got '{v}'")),
    }
}

fn parse_usize(key: &str, v: &str) -> Result<usize, String> {
    v.parse()
        .map_err(|_| format!("key {key}: expected a non-negative integer, got '{v}'"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("key {key}: expected true or false, got '{v}'")),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, String> {
    if v.is_empty() {
        return Ok(vec![]);
    }
    v.split(',').map(|s| parse_f64(key, s.trim())).collect()
}

fn parse_pair(key: &str, v: &str) -> Result<Option<(f64, f64)>, String> {
    if v.is_empty() {
        return Ok(None);
    }
    let list = parse_list(key, v)?;
    if list.len() != 2 {
        return Err(format!("key {key}: expected 'a,b', got '{v}'"));
    }
    Ok(Some((list[0], list[1])))
}

fn parse_mode(key: &str, v: &str) -> Result<(i64, i64), String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("key {key}: expected 'm1,m2', got '{v}'"));
    }
    let m = |s: &str| {
        s.parse::<i64>()
            .map_err(|_| format!("key {key}: expected integers, got '{v}'"))
    };
    Ok((m(parts[0])?, m(parts[1])?))
}

fn parse_opt_f64(key: &str, v: &str) -> Result<Option<f64>, String> {
    if v.is_empty() {
        Ok(None)
    } else {
        parse_f64(key, v).map(Some)
    }
}

fn require(key: &str, v: &str) -> Result<(), String> {
    if v.is_empty() && REQUIRED.contains(&key) {
        return Err(format!("missing required key '{key}'"));
    }
    Ok(())
}

fn generator_section(raw: &mut Raw, section: &str) -> Result<Option<GeneratorSpec>, String> {
    let name_key = format!("{section}.name");
    let name = raw.get(&name_key);
    require(&name_key, &name)?;
    let amplitude = parse_f64(&format!("{section}.amplitude"), &raw.get(&format!("{section}.amplitude")))?;
    let width = parse_f64(&format!("{section}.width"), &raw.get(&format!("{section}.width")))?;
    let mode = parse_mode(&format!("{section}.mode"), &raw.get(&format!("{section}.mode")))?;
    let epsilon = parse_f64(&format!("{section}.epsilon"), &raw.get(&format!("{section}.epsilon")))?;
    if name.is_empty() {
        return Ok(None);
    }
    let kind = GeneratorKind::parse(&name).map_err(|e| format!("key {name_key}: {e}"))?;
    let mut spec = GeneratorSpec::new(kind);
    spec.amplitude = amplitude;
    spec.width = width;
    spec.mode = mode;
    spec.epsilon = epsilon;
    Ok(Some(spec))
}

pub fn parse_str(text: &str) -> Result<RunConfig, String> {
    let mut raw = Raw::parse(text)?;

    for &key in REQUIRED {
        // touch nothing yet; just produce the canonical error for absences
        if !raw.entries.contains_key(key) {
            return Err(format!("missing required key '{key}'"));
        }
    }

    let n = parse_usize("grid.n", &raw.get("grid.n"))?;
    let length = parse_f64("grid.length", &raw.get("grid.length"))?;
    let fraction = parse_f64("grid.dealias_fraction", &raw.get("grid.dealias_fraction"))?;
    let grid = GridSpec::with_dealias_fraction(n, length, fraction)
        .map_err(|e| format!("grid: {e}"))?;

    let rotation = match raw.get("model.rotation").as_str() {
        "corotation" => RotationMode::Corotation,
        "full" => RotationMode::Full,
        other => {
            return Err(format!(
                "key model.rotation: expected corotation or full, got '{other}'"
            ))
        }
    };
    let params = ModelParams {
        a: parse_f64("model.a", &raw.get("model.a"))?,
        mu: parse_f64("model.mu", &raw.get("model.mu"))?,
        nu: parse_f64("model.nu", &raw.get("model.nu"))?,
        alpha: parse_f64("model.alpha", &raw.get("model.alpha"))?,
        b: parse_f64("model.b", &raw.get("model.b"))?,
        rotation,
    };
    params.validate().map_err(|e| format!("model: {e}"))?;

    let scheme = match raw.get("stepper.scheme").as_str() {
        "if_rk4" => Scheme::IfRk4,
        "if_ssprk3" => Scheme::IfSsprk3,
        other => {
            return Err(format!(
                "key stepper.scheme: expected if_rk4 or if_ssprk3, got '{other}'"
            ))
        }
    };
    let mut stepper = StepperConfig::new(
        parse_f64("stepper.dt", &raw.get("stepper.dt"))?,
        scheme,
        parse_f64("stepper.t_end", &raw.get("stepper.t_end"))?,
    );
    stepper.cfl_safety = parse_f64("stepper.cfl_safety", &raw.get("stepper.cfl_safety"))?;
    stepper.adapt = parse_bool("stepper.adaptive", &raw.get("stepper.adaptive"))?;
    stepper.blowup_factor = parse_f64(
        "stepper.blowup_factor",
        &raw.get("stepper.blowup_factor"),
    )?;
    stepper.validate().map_err(|e| format!("stepper: {e}"))?;

    let initial = generator_section(&mut raw, "initial")?
        .ok_or_else(|| "missing required key 'initial.name'".to_string())?;
    let initial2 = generator_section(&mut raw, "initial2")?;

    let profile_text = raw.get("diagnostics.profile");
    let profile = match profile_text.split_once(':') {
        Some(("power", l)) => SplittingProfile::Power {
            l: parse_f64("diagnostics.profile", l)?,
        },
        Some(("logpower", l)) => SplittingProfile::LogPower {
            l: parse_f64("diagnostics.profile", l)?,
        },
        _ => {
            return Err(format!(
                "key diagnostics.profile: expected power:<l> or logpower:<l>, got '{profile_text}'"
            ))
        }
    };
    let diag = DiagnosticsConfig {
        eta: parse_f64("diagnostics.eta", &raw.get("diagnostics.eta"))?,
        c2: parse_f64("diagnostics.c2", &raw.get("diagnostics.c2"))?,
        profile,
        p_list: parse_list("diagnostics.p_list", &raw.get("diagnostics.p_list"))?,
        sigma_list: parse_list("diagnostics.sigma_list", &raw.get("diagnostics.sigma_list"))?,
        b0_every: parse_usize("diagnostics.b0_every", &raw.get("diagnostics.b0_every"))?,
    };
    diag.validate().map_err(|e| format!("diagnostics: {e}"))?;
    let cadence = parse_f64("diagnostics.cadence", &raw.get("diagnostics.cadence"))?;
    if !(cadence >= 0.0) || !cadence.is_finite() {
        return Err(format!(
            "key diagnostics.cadence: needs a finite value >= 0, got {cadence}"
        ));
    }
    let fit_window = parse_pair("diagnostics.fit_window", &raw.get("diagnostics.fit_window"))?;

    let outputs = Outputs {
        dir: PathBuf::from(raw.get("outputs.dir")),
        csv: parse_bool("outputs.csv", &raw.get("outputs.csv"))?,
        snapshots: parse_list("outputs.snapshots", &raw.get("outputs.snapshots"))?,
        seed: raw
            .get("outputs.seed")
            .parse()
            .map_err(|_| "key outputs.seed: expected a non-negative integer".to_string())?,
    };

    let checks = Checks {
        tau_identity_tol: parse_opt_f64(
            "checks.tau_identity_tol",
            &raw.get("checks.tau_identity_tol"),
        )?,
        lp_margin_tol: parse_opt_f64("checks.lp_margin_tol", &raw.get("checks.lp_margin_tol"))?,
        energy_residual_tol: parse_opt_f64(
            "checks.energy_residual_tol",
            &raw.get("checks.energy_residual_tol"),
        )?,
        monotone_tol: parse_opt_f64("checks.monotone_tol", &raw.get("checks.monotone_tol"))?,
        fit_l2: parse_pair("checks.fit_l2", &raw.get("checks.fit_l2"))?,
        fit_grad: parse_pair("checks.fit_grad", &raw.get("checks.fit_grad"))?,
        r2_min: parse_f64("checks.r2_min", &raw.get("checks.r2_min"))?,
    };

    raw.finish()?;
    Ok(RunConfig {
        grid,
        params,
        stepper,
        initial,
        initial2,
        diag,
        cadence,
        fit_window,
        outputs,
        checks,
    })
}

pub fn parse_file(path: &std::path::Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config '{}': {e}", path.display()))?;
    parse_str(&text)
}

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        // shortest representation that parses back to the same bits
        format!("{v:?}")
    }
}

fn fmt_list(vs: &[f64]) -> String {
    vs.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
}

fn fmt_pair(p: Option<(f64, f64)>) -> String {
    p.map_or(String::new(), |(a, b)| {
        format!("{},{}", fmt_f64(a), fmt_f64(b))
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), fmt_f64)
}

fn push_generator(out: &mut String, section: &str, spec: Option<&GeneratorSpec>) {
    let default = GeneratorSpec::new(GeneratorKind::TaylorGreen);
    let s = spec.unwrap_or(&default);
    let name = spec.map_or("", |s| s.kind.name());
    let _ = writeln!(out, "{section}.name = {name}");
    let _ = writeln!(out, "{section}.amplitude = {}", fmt_f64(s.amplitude));
    let _ = writeln!(out, "{section}.width = {}", fmt_f64(s.width));
    let _ = writeln!(out, "{section}.mode = {},{}", s.mode.0, s.mode.1);
    let _ = writeln!(out, "{section}.epsilon = {}", fmt_f64(s.epsilon));
}

/// Canonical echo: every key from the reference table with its effective
/// value. Parsing the echo reproduces the config exactly.
pub fn echo(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "# effective run configuration (all keys)");
    let _ = writeln!(w, "grid.n = {}", cfg.grid.n);
    let _ = writeln!(w, "grid.length = {}", fmt_f64(cfg.grid.box_length));
    let _ = writeln!(
        w,
        "grid.dealias_fraction = {}",
        fmt_f64(cfg.grid.dealias_fraction)
    );
    let rotation = match cfg.params.rotation {
        RotationMode::Corotation => "corotation",
        RotationMode::Full => "full",
    };
    let _ = writeln!(w, "model.rotation = {rotation}");
    let _ = writeln!(w, "model.a = {}", fmt_f64(cfg.params.a));
    let _ = writeln!(w, "model.mu = {}", fmt_f64(cfg.params.mu));
    let _ = writeln!(w, "model.nu = {}", fmt_f64(cfg.params.nu));
    let _ = writeln!(w, "model.alpha = {}", fmt_f64(cfg.params.alpha));
    let _ = writeln!(w, "model.b = {}", fmt_f64(cfg.params.b));
    let _ = writeln!(w, "stepper.dt = {}", fmt_f64(cfg.stepper.dt));
    let scheme = match cfg.stepper.scheme {
        Scheme::IfRk4 => "if_rk4",
        Scheme::IfSsprk3 => "if_ssprk3",
    };
    let _ = writeln!(w, "stepper.scheme = {scheme}");
    let _ = writeln!(w, "stepper.t_end = {}", fmt_f64(cfg.stepper.t_end));
    let _ = writeln!(w, "stepper.cfl_safety = {}", fmt_f64(cfg.stepper.cfl_safety));
    let _ = writeln!(w, "stepper.adaptive = {}", cfg.stepper.adapt);
    let _ = writeln!(
        w,
        "stepper.blowup_factor = {}",
        fmt_f64(cfg.stepper.blowup_factor)
    );
    push_generator(w, "initial", Some(&cfg.initial));
    push_generator(w, "initial2", cfg.initial2.as_ref());
    let _ = writeln!(w, "diagnostics.cadence = {}", fmt_f64(cfg.cadence));
    let _ = writeln!(w, "diagnostics.eta = {}", fmt_f64(cfg.diag.eta));
    let _ = writeln!(w, "diagnostics.c2 = {}", fmt_f64(cfg.diag.c2));
    let profile = match cfg.diag.profile {
        SplittingProfile::Power { l } => format!("power:{}", fmt_f64(l)),
        SplittingProfile::LogPower { l } => format!("logpower:{}", fmt_f64(l)),
    };
    let _ = writeln!(w, "diagnostics.profile = {profile}");
    let _ = writeln!(w, "diagnostics.p_list = {}", fmt_list(&cfg.diag.p_list));
    let _ = writeln!(
        w,
        "diagnostics.sigma_list = {}",
        fmt_list(&cfg.diag.sigma_list)
    );
    let _ = writeln!(w, "diagnostics.b0_every = {}", cfg.diag.b0_every);
    let _ = writeln!(w, "diagnostics.fit_window = {}", fmt_pair(cfg.fit_window));
    let _ = writeln!(w, "outputs.dir = {}", cfg.outputs.dir.display());
    let _ = writeln!(w, "outputs.csv = {}", cfg.outputs.csv);
    let _ = writeln!(w, "outputs.snapshots = {}", fmt_list(&cfg.outputs.snapshots));
    let _ = writeln!(w, "outputs.seed = {}", cfg.outputs.seed);
    let _ = writeln!(
        w,
        "checks.tau_identity_tol = {}",
        fmt_opt(cfg.checks.tau_identity_tol)
    );
    let _ = writeln!(
        w,
        "checks.lp_margin_tol = {}",
        fmt_opt(cfg.checks.lp_margin_tol)
    );
    let _ = writeln!(
        w,
        "checks.energy_residual_tol = {}",
        fmt_opt(cfg.checks.energy_residual_tol)
    );
    let _ = writeln!(
        w,
        "checks.monotone_tol = {}",
        fmt_opt(cfg.checks.monotone_tol)
    );
    let _ = writeln!(w, "checks.fit_l2 = {}", fmt_pair(cfg.checks.fit_l2));
    let _ = writeln!(w, "checks.fit_grad = {}", fmt_pair(cfg.checks.fit_grad));
    let _ = writeln!(w, "checks.r2_min = {}", fmt_f64(cfg.checks.r2_min));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
grid.n = 32
grid.length = 6.283185307179586
stepper.dt = 0.01
stepper.t_end = 0.1
initial.name = taylor_green
";

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_str(MINIMAL).unwrap();
        assert_eq!(cfg.grid.n, 32);
        assert_eq!(cfg.params.mu, 1.0);
        assert_eq!(cfg.params.rotation, RotationMode::Full);
        assert_eq!(cfg.diag.p_list, vec![2.0, 4.0, f64::INFINITY]);
        assert_eq!(cfg.cadence, 0.1);
        assert!(cfg.initial2.is_none());
        assert!(cfg.checks.tau_identity_tol.is_none());
        assert_eq!(cfg.outputs.dir, PathBuf::from("out"));
    }

    #[test]
    fn echo_round_trips_exactly() {
        let text = format!(
            "{MINIMAL}\
model.rotation = corotation
model.a = 1.0
diagnostics.p_list = 2,inf
diagnostics.profile = logpower:1.5
initial2.name = constant_tau
initial2.amplitude = 0.25
outputs.snapshots = 0.05,0.1
outputs.seed = 7
checks.tau_identity_tol = 1e-5
checks.fit_l2 = -0.65,-0.35
"
        );
        let cfg = parse_str(&text).unwrap();
        let once = echo(&cfg);
        let twice = echo(&parse_str(&once).unwrap());
        assert_eq!(once, twice);
        assert!(once.contains("model.a = 1.0"));
        assert!(once.contains("diagnostics.p_list = 2.0,inf"));
        assert!(once.contains("initial2.name = constant_tau"));
        assert!(once.contains("checks.tau_identity_tol = 1e-5"));
    }

    #[test]
    fn unknown_key_names_nearest() {
        let text = format!("{MINIMAL}viscocity = 0.1\n");
        let err = parse_str(&text).unwrap_err();
        assert!(err.contains("unknown key 'viscocity'"), "{err}");
        assert!(err.contains("nearest valid key"), "{err}");
    }

    #[test]
    fn typo_in_known_section_suggests_sibling() {
        let text = format!("{MINIMAL}stepper.dtt = 0.1\n");
        let err = parse_str(&text).unwrap_err();
        assert!(err.contains("'stepper.dt'"), "{err}");
    }

    #[test]
    fn missing_required_and_type_errors_name_the_key() {
        let err = parse_str("grid.n = 32\n").unwrap_err();
        assert!(err.contains("missing required key"), "{err}");
        let text = MINIMAL.replace("stepper.dt = 0.01", "stepper.dt = fast");
        let err = parse_str(&text).unwrap_err();
        assert!(err.contains("key stepper.dt"), "{err}");
        let text = format!("{MINIMAL}initial.name = vortex_sheet\n");
        let err = parse_str(&text).unwrap_err();
        assert!(err.contains("duplicate key"), "{err}");
    }

    #[test]
    fn bad_generator_name_is_an_error() {
        let text = MINIMAL.replace("taylor_green", "vortex_sheet");
        let err = parse_str(&text).unwrap_err();
        assert!(err.contains("unknown generator"), "{err}");
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = format!("# header\n\n{MINIMAL}  # trailing\n");
        assert!(parse_str(&text).is_ok());
    }
}
