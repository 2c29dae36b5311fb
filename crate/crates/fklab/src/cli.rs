//! Experiment driver: config file parsing and validation, the minimize /
//! sweep / criterion / lattice-check entry points, and CSV/JSON emission.
//!
//! Precedence for runtime knobs is flags > config file > built-in defaults;
//! the binary applies flag overrides before calling into this module.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::criterion::{
    competitor_switch_points, destruction_margin_spec, CriterionReport,
};
use crate::error::{Error, Result};
use crate::hull::HullFunction;
use crate::lattice::{
    configuration_from_hull, lattice_el_residual, sampled_class_a_check, ClassAReport,
    LatticeBox,
};
use crate::model::{holder_norm, Model, RotationVector};
use crate::percival::{minimize_percival, MinimizeParams, MinimizeResult};

fn default_d() -> usize {
    2
}

fn default_omega() -> Vec<f64> {
    RotationVector::quadratic_irrationals(2).components().to_vec()
}

fn default_grid() -> usize {
    1024
}

fn default_alphas() -> Vec<f64> {
    vec![0.4, 0.6]
}

fn default_x0() -> f64 {
    0.5
}

fn default_profile() -> String {
    "mollifier".into()
}

fn default_output() -> String {
    "out".into()
}

fn default_box_radius() -> i64 {
    16
}

fn default_trials() -> usize {
    1000
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeSection {
    pub max_iters: Option<usize>,
    pub step_size: Option<f64>,
    pub tol_grad: Option<f64>,
    pub tol_obj: Option<f64>,
}

impl MinimizeSection {
    /// Resolution-scaled defaults with per-field overrides from the file.
    pub fn params(&self, grid_n: usize, d: usize, seed: u64) -> MinimizeParams {
        let mut p = MinimizeParams::for_resolution(grid_n, d);
        if let Some(v) = self.max_iters {
            p.max_iters = v;
        }
        if let Some(v) = self.step_size {
            p.step_size = v;
        }
        if let Some(v) = self.tol_grad {
            p.tol_grad = v;
        }
        if let Some(v) = self.tol_obj {
            p.tol_obj = v;
        }
        p.seed = seed;
        p
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(default = "default_box_radius")]
    pub box_radius: i64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub amplitude: Option<f64>,
}

impl Default for LatticeSection {
    fn default() -> Self {
        LatticeSection {
            box_radius: default_box_radius(),
            trials: default_trials(),
            amplitude: None,
        }
    }
}

/// One experiment description: the model family, the rotation vector, grid
/// and minimizer settings, and output plumbing. `n_values` empty together
/// with `integrable = true` selects the zero-potential model.
#[derive(Clone, Debug, Deserialize, PartialEq, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_omega")]
    pub omega: Vec<f64>,
    #[serde(default = "default_grid")]
    pub grid_n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub integrable: bool,
    #[serde(default)]
    pub n_values: Vec<u64>,
    #[serde(default)]
    pub r_values: Vec<f64>,
    #[serde(default = "default_x0")]
    pub x0: f64,
    /// Bump shape identifier; only the compactly supported mollifier is
    /// implemented.
    #[serde(default = "default_profile")]
    pub profile_id: String,
    #[serde(default = "default_alphas")]
    pub holder_alphas: Vec<f64>,
    #[serde(default = "default_output")]
    pub output_path: String,
    #[serde(default)]
    pub minimize: MinimizeSection,
    #[serde(default)]
    pub lattice: LatticeSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            d: default_d(),
            omega: default_omega(),
            grid_n: default_grid(),
            seed: 0,
            integrable: false,
            n_values: Vec::new(),
            r_values: Vec::new(),
            x0: default_x0(),
            profile_id: default_profile(),
            holder_alphas: default_alphas(),
            output_path: default_output(),
            minimize: MinimizeSection::default(),
            lattice: LatticeSection::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Hash of the canonical serialization; stamped into every CSV so a
    /// result file identifies the exact configuration that produced it.
    pub fn sha256(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_toml().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("d must be >= 1".into()));
        }
        if self.omega.len() != self.d {
            return Err(Error::Config(format!(
                "omega has {} components but d = {}",
                self.omega.len(),
                self.d
            )));
        }
        RotationVector::new(self.omega.clone())
            .map_err(|e| Error::Config(format!("omega: {e}")))?;
        if self.grid_n < 8 {
            return Err(Error::Config(format!("grid_n must be >= 8, got {}", self.grid_n)));
        }
        if !self.integrable {
            if self.n_values.is_empty() {
                return Err(Error::Config(
                    "n_values must be non-empty (or set integrable = true)".into(),
                ));
            }
            if self.r_values.is_empty() {
                return Err(Error::Config(
                    "r_values must be non-empty (or set integrable = true)".into(),
                ));
            }
            for &r in &self.r_values {
                if !r.is_finite() || r <= 0.0 {
                    return Err(Error::Config(format!("r_values entries must be positive, got {r}")));
                }
            }
            for &n in &self.n_values {
                for &r in &self.r_values {
                    let radius = (n as f64).powf(-1.0 / r);
                    if radius >= 0.5 {
                        return Err(Error::Config(format!(
                            "pair (n = {n}, r = {r}) gives support radius {radius:.4} >= 1/2; the bump overlaps itself"
                        )));
                    }
                }
            }
        }
        if self.profile_id != "mollifier" {
            return Err(Error::Config(format!(
                "unknown profile_id {:?}; expected \"mollifier\"",
                self.profile_id
            )));
        }
        if !(0.0..1.0).contains(&self.x0) {
            return Err(Error::Config(format!("x0 must lie in [0, 1), got {}", self.x0)));
        }
        for &a in &self.holder_alphas {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Config(format!(
                    "holder_alphas entries must lie in (0, 1), got {a}"
                )));
            }
        }
        if self.lattice.box_radius < 2 {
            return Err(Error::Config(format!(
                "lattice.box_radius must be >= 2, got {}",
                self.lattice.box_radius
            )));
        }
        if self.lattice.trials < 1 {
            return Err(Error::Config("lattice.trials must be >= 1".into()));
        }
        Ok(())
    }

    fn rotation(&self) -> RotationVector {
        RotationVector::new(self.omega.clone()).expect("validated")
    }

    /// Every model in the configured family, tagged by (n, r). The
    /// integrable model is tagged (0, 0).
    fn cases(&self) -> Result<Vec<(u64, f64, Model)>> {
        if self.integrable {
            return Ok(vec![(0, 0.0, Model::integrable(self.d))]);
        }
        let mut out = Vec::new();
        for &n in &self.n_values {
            for &r in &self.r_values {
                out.push((n, r, Model::uniform_bump(self.d, n, r, self.x0)?));
            }
        }
        Ok(out)
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)?;
    Ok(())
}

fn case_label(n: u64, r: f64) -> String {
    if n == 0 {
        "integrable".into()
    } else {
        format!("n{n}_r{r}")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizeArtifact {
    pub n: u64,
    pub r: f64,
    pub hull_csv: String,
    #[serde(flatten)]
    pub result: MinimizeResult,
}

/// Minimizes each configured case from the identity hull, writing one hull
/// CSV and one result JSON per case under `output_path`.
pub fn run_minimize(config: &Config) -> Result<Vec<MinimizeArtifact>> {
    config.validate()?;
    let omega = config.rotation();
    let out_dir = PathBuf::from(&config.output_path);
    ensure_dir(&out_dir)?;
    let params = config
        .minimize
        .params(config.grid_n, config.d, config.seed);

    let mut artifacts = Vec::new();
    for (n, r, model) in config.cases()? {
        let init = HullFunction::identity(config.grid_n);
        let result = minimize_percival(&omega, &model, &init, &params)?;
        let label = case_label(n, r);
        let hull_path = out_dir.join(format!("hull_{label}.csv"));
        let mut f = fs::File::create(&hull_path)?;
        result.minimizer.write_csv(&mut f)?;
        let artifact = MinimizeArtifact {
            n,
            r,
            hull_csv: hull_path.display().to_string(),
            result,
        };
        let json_path = out_dir.join(format!("result_{label}.json"));
        fs::write(
            &json_path,
            serde_json::to_string_pretty(&artifact).map_err(|e| Error::Config(e.to_string()))?,
        )?;
        artifacts.push(artifact);
    }
    Ok(artifacts)
}

/// One sweep result per (n, r, direction). Failures land in `error` and
/// leave the numeric columns NaN so the sweep never aborts midway.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub n: u64,
    pub r: f64,
    pub j: usize,
    pub holder_norms: Vec<f64>,
    pub percival_min: f64,
    pub minimizer_gap: f64,
    pub margin: f64,
    pub margin_factor2: f64,
    pub destroys: bool,
    pub el_residual_sup: f64,
    pub wall_time_ms: f64,
    pub error: String,
}

fn sweep_row(config: &Config, n: u64, r: f64) -> Vec<SweepRow> {
    let start = Instant::now();
    let omega = config.rotation();
    let blank = |err: String| SweepRow {
        n,
        r,
        j: 0,
        holder_norms: vec![f64::NAN; config.holder_alphas.len()],
        percival_min: f64::NAN,
        minimizer_gap: f64::NAN,
        margin: f64::NAN,
        margin_factor2: f64::NAN,
        destroys: false,
        el_residual_sup: f64::NAN,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        error: err,
    };

    let model = match Model::uniform_bump(config.d, n, r, config.x0) {
        Ok(m) => m,
        Err(e) => return vec![blank(e.to_string())],
    };
    let holders: Result<Vec<f64>> = config
        .holder_alphas
        .iter()
        .map(|&a| holder_norm(model.potential(0), a, 4096))
        .collect();
    let holders = match holders {
        Ok(h) => h,
        Err(e) => return vec![blank(e.to_string())],
    };
    let params = config
        .minimize
        .params(config.grid_n, config.d, config.seed);
    let init = HullFunction::identity(config.grid_n);
    let min_res = match minimize_percival(&omega, &model, &init, &params) {
        Ok(m) => m,
        Err(e) => return vec![blank(e.to_string())],
    };

    // Margins against the identity hull: the destruction inequality is a
    // statement about the continuous candidate, not the (possibly already
    // gapped) minimizer.
    let h1 = HullFunction::identity(config.grid_n);
    let mut rows = Vec::new();
    for j in 0..config.d {
        let report = competitor_switch_points(&h1, model.potential(j))
            .map(|spec| destruction_margin_spec(&h1, &spec, model.potential(j), j));
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        match report {
            Ok(rep) => rows.push(SweepRow {
                n,
                r,
                j,
                holder_norms: holders.clone(),
                percival_min: min_res.objective,
                minimizer_gap: min_res.gap,
                margin: rep.margin,
                margin_factor2: rep.margin_factor2,
                destroys: rep.destroys,
                el_residual_sup: min_res.el_residual_sup,
                wall_time_ms: elapsed,
                error: String::new(),
            }),
            Err(e) => {
                let mut row = blank(e.to_string());
                row.j = j;
                rows.push(row);
            }
        }
    }
    rows
}

fn write_sweep_csv<W: Write>(
    out: &mut W,
    config: &Config,
    rows: &[SweepRow],
) -> Result<()> {
    writeln!(out, "# config_sha256={}", config.sha256())?;
    let holder_cols: Vec<String> = config
        .holder_alphas
        .iter()
        .map(|a| format!("holder_alpha_{a}"))
        .collect();
    writeln!(
        out,
        "n,r,j,{},percival_min,minimizer_gap,margin,margin_factor2,destroys,el_residual_sup,wall_time_ms,error",
        holder_cols.join(",")
    )?;
    for row in rows {
        let holders: Vec<String> = row.holder_norms.iter().map(|h| format!("{h:.12e}")).collect();
        writeln!(
            out,
            "{},{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e},{:.3},{}",
            row.n,
            row.r,
            row.j,
            holders.join(","),
            row.percival_min,
            row.minimizer_gap,
            row.margin,
            row.margin_factor2,
            row.destroys,
            row.el_residual_sup,
            row.wall_time_ms,
            row.error
        )?;
    }
    Ok(())
}

/// Runs the full (n, r) grid, one row per direction, in parallel over
/// cases. Rows come back ordered by (n, r, j) regardless of scheduling.
pub fn run_sweep(config: &Config, jobs: Option<usize>) -> Result<Vec<SweepRow>> {
    config.validate()?;
    if config.integrable {
        return Err(Error::Config(
            "sweep requires a bump family; unset integrable".into(),
        ));
    }
    let mut cases: Vec<(u64, f64)> = Vec::new();
    for &n in &config.n_values {
        for &r in &config.r_values {
            cases.push((n, r));
        }
    }
    cases.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        cases
            .par_iter()
            .flat_map_iter(|&(n, r)| sweep_row(config, n, r))
            .collect()
    });

    let path = PathBuf::from(&config.output_path);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    let mut f = fs::File::create(&path)?;
    write_sweep_csv(&mut f, config, &rows)?;
    Ok(rows)
}

/// Evaluates the destruction criterion for every case and direction against
/// the identity hull; writes one CSV keyed by (j, n, r).
pub fn run_criterion(config: &Config) -> Result<Vec<(u64, f64, CriterionReport)>> {
    config.validate()?;
    if config.integrable {
        return Err(Error::Config(
            "criterion requires a bump family; unset integrable".into(),
        ));
    }
    let h1 = HullFunction::identity(config.grid_n);
    let mut reports = Vec::new();
    for (n, r, model) in config.cases()? {
        for j in 0..config.d {
            let spec = competitor_switch_points(&h1, model.potential(j))?;
            reports.push((n, r, destruction_margin_spec(&h1, &spec, model.potential(j), j)));
        }
    }
    let path = PathBuf::from(&config.output_path);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    let mut f = fs::File::create(&path)?;
    writeln!(f, "# config_sha256={}", config.sha256())?;
    writeln!(f, "j,n,r,lhs,rhs,margin,margin_factor2,destroys")?;
    for (n, r, rep) in &reports {
        writeln!(
            f,
            "{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            rep.direction, n, r, rep.lhs, rep.rhs, rep.margin, rep.margin_factor2, rep.destroys
        )?;
    }
    Ok(reports)
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeCheckReport {
    pub n: u64,
    pub r: f64,
    pub box_radius: i64,
    pub el_residual_sup: f64,
    pub class_a: ClassAReport,
}

/// Minimizes each case, samples the minimizing hull onto the box, and
/// reports the lattice EL residual plus the sampled ground-state check.
pub fn run_lattice_check(config: &Config) -> Result<Vec<LatticeCheckReport>> {
    config.validate()?;
    let omega = config.rotation();
    let b = LatticeBox::new(config.d, config.lattice.box_radius)?;
    let params = config
        .minimize
        .params(config.grid_n, config.d, config.seed);
    let mut reports = Vec::new();
    for (n, r, model) in config.cases()? {
        let init = HullFunction::identity(config.grid_n);
        let res = minimize_percival(&omega, &model, &init, &params)?;
        let u = configuration_from_hull(&res.minimizer, &omega, b)?;
        let residual = lattice_el_residual(&u, &model)?;
        let sup = residual.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let class_a = sampled_class_a_check(
            &u,
            &model,
            config.lattice.trials,
            config.seed,
            config.lattice.amplitude,
        )?;
        reports.push(LatticeCheckReport {
            n,
            r,
            box_radius: b.radius,
            el_residual_sup: sup,
            class_a,
        });
    }
    let out_dir = PathBuf::from(&config.output_path);
    ensure_dir(&out_dir)?;
    let json_path = out_dir.join("lattice_check.json");
    fs::write(
        &json_path,
        serde_json::to_string_pretty(&reports).map_err(|e| Error::Config(e.to_string()))?,
    )?;
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump_config() -> Config {
        Config {
            integrable: false,
            n_values: vec![16],
            r_values: vec![0.5],
            grid_n: 256,
            ..Config::default()
        }
    }

    #[test]
    fn config_round_trip() {
        let cfg = bump_config();
        let text = cfg.to_toml();
        let back = Config::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn default_config_is_integrable_invalid() {
        // bump family selected but no (n, r) grid given
        let err = Config::default().validate().unwrap_err();
        assert!(err.to_string().contains("n_values"));
    }

    #[test]
    fn overlapping_bump_names_the_pair() {
        let mut cfg = bump_config();
        cfg.n_values = vec![2];
        cfg.r_values = vec![2.0];
        let err = cfg.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n = 2") && msg.contains("r = 2"), "{msg}");
    }

    #[test]
    fn hash_tracks_content() {
        let a = bump_config();
        let mut b = bump_config();
        b.seed = 1;
        assert_ne!(a.sha256(), b.sha256());
        assert_eq!(a.sha256(), bump_config().sha256());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = Config::from_toml("nonsense_key = 3").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn minimize_integrable_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Config {
            integrable: true,
            grid_n: 256,
            output_path: dir.path().join("out").display().to_string(),
            ..Config::default()
        };
        let arts = run_minimize(&cfg).unwrap();
        assert_eq!(arts.len(), 1);
        let omega = cfg.rotation();
        let expected: f64 = omega.components().iter().map(|w| w * w / 2.0).sum();
        assert!((arts[0].result.objective - expected).abs() < 1e-6);
        assert!(PathBuf::from(&arts[0].hull_csv).exists());
    }

    #[test]
    fn sweep_rows_ordered_and_stamped() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Config {
            n_values: vec![32, 16],
            r_values: vec![0.5],
            grid_n: 128,
            output_path: dir.path().join("sweep.csv").display().to_string(),
            ..Config::default()
        };
        let rows = run_sweep(&cfg, Some(2)).unwrap();
        assert_eq!(rows.len(), 2 * cfg.d);
        let keys: Vec<(u64, usize)> = rows.iter().map(|r| (r.n, r.j)).collect();
        assert_eq!(keys, vec![(16, 0), (16, 1), (32, 0), (32, 1)]);
        let text = fs::read_to_string(&cfg.output_path).unwrap();
        assert!(text.starts_with(&format!("# config_sha256={}", cfg.sha256())));
        for row in &rows {
            assert!(row.error.is_empty(), "{}", row.error);
            assert_eq!(row.destroys, row.margin_factor2 > 0.0);
        }
    }

    #[test]
    fn criterion_csv_written() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Config {
            n_values: vec![64],
            r_values: vec![0.5, 2.0],
            grid_n: 128,
            output_path: dir.path().join("crit.csv").display().to_string(),
            ..Config::default()
        };
        let reports = run_criterion(&cfg).unwrap();
        assert_eq!(reports.len(), 2 * cfg.d);
        let text = fs::read_to_string(&cfg.output_path).unwrap();
        assert_eq!(text.lines().count(), 2 + reports.len());
    }

    #[test]
    fn lattice_check_integrable_clean() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Config {
            integrable: true,
            grid_n: 128,
            lattice: LatticeSection {
                box_radius: 4,
                trials: 50,
                amplitude: None,
            },
            output_path: dir.path().join("lat").display().to_string(),
            ..Config::default()
        };
        let reports = run_lattice_check(&cfg).unwrap();
        assert_eq!(reports.len(), 1);
        assert!(reports[0].el_residual_sup < 1e-8);
        assert_eq!(reports[0].class_a.violations, 0);
    }
}
