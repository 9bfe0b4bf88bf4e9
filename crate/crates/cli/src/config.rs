//! Experiment configuration: a flat `key = value` file with `[section]`
//! headers, chosen so a whole experiment is reproducible from one manifest.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use evnav_core::bandit::PolicyKind;
use evnav_core::posteriors::{ChargePosterior, PriorParams};
use evnav_core::road_graph::VehicleParams;

use crate::generate::GeneratorSpec;
use crate::CliError;

/// Everything a run needs: the instance (files or generator), trip
/// terminals, vehicle and prior parameters, and the experiment plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub nodes_path: Option<PathBuf>,
    pub edges_path: Option<PathBuf>,
    /// Trip terminals; when absent the runner picks the nodes nearest the
    /// southwest / northeast corners of the instance.
    pub source: Option<u64>,
    pub target: Option<u64>,
    pub generator: Option<GeneratorSpec>,
    pub vehicle: VehicleParams,
    pub priors: PriorParams,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicyKind>,
    /// epsilon_t = epsilon_coeff / sqrt(t) for the epsilon-greedy policy.
    pub epsilon_coeff: f64,
    /// Clamp the mean power into the station envelope when computing
    /// expected losses, mirroring the truncation of the feedback channel.
    pub truncate_expected_loss: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            nodes_path: None,
            edges_path: None,
            source: None,
            target: None,
            generator: None,
            vehicle: default_vehicle(),
            priors: PriorParams::default(),
            horizon: 1000,
            seeds: vec![1, 2, 3, 4, 5],
            policies: PolicyKind::ALL.to_vec(),
            epsilon_coeff: 1.0,
            truncate_expected_loss: true,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Medium-duty truck defaults with a deliberately small battery, so trips
/// need several charging stops.
pub fn default_vehicle() -> VehicleParams {
    VehicleParams {
        mass_kg: 13_700.0,
        gravity_mps2: 9.81,
        rolling_coeff: 0.0064,
        drag_coeff: 0.7,
        frontal_area_m2: 8.0,
        air_density_kgm3: 1.2,
        efficiency: 1.0,
        battery_capacity_ws: 2.5e8,
        soc_min_frac: 0.1,
        soc_max_frac: 0.8,
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading config {}", path.display()), e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, file: &Path) -> Result<Self, CliError> {
        let mut cfg = ExperimentConfig::default();
        let mut generator = GeneratorSpec::default();
        let mut saw_generator = false;
        let mut section = String::new();
        let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let n = lineno + 1;
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::parse(file, n, "unterminated section header"))?;
                section = name.trim().to_string();
                match section.as_str() {
                    "instance" | "generator" | "vehicle" | "priors" | "experiment" => {}
                    other => {
                        return Err(CliError::parse(file, n, format!("unknown section [{other}]")))
                    }
                }
                if section == "generator" {
                    saw_generator = true;
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::parse(file, n, "expected key = value"));
            };
            let key = key.trim();
            let value = value.trim();
            if !seen.insert((section.clone(), key.to_string())) {
                return Err(CliError::parse(file, n, format!("duplicate key {key}")));
            }
            let f64_val = || {
                value
                    .parse::<f64>()
                    .map_err(|_| CliError::parse(file, n, format!("{key}: expected a number")))
            };
            let u64_val = || {
                value
                    .parse::<u64>()
                    .map_err(|_| CliError::parse(file, n, format!("{key}: expected an integer")))
            };
            let bool_val = || match value {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(CliError::parse(file, n, format!("{key}: expected true/false"))),
            };
            match (section.as_str(), key) {
                ("instance", "nodes") => cfg.nodes_path = Some(PathBuf::from(value)),
                ("instance", "edges") => cfg.edges_path = Some(PathBuf::from(value)),
                ("instance", "source") => cfg.source = Some(u64_val()?),
                ("instance", "target") => cfg.target = Some(u64_val()?),
                ("generator", "node_count") => generator.node_count = u64_val()? as usize,
                ("generator", "charger_fraction") => generator.charger_fraction = f64_val()?,
                ("generator", "origin_lat") => generator.origin_lat = f64_val()?,
                ("generator", "origin_lon") => generator.origin_lon = f64_val()?,
                ("generator", "extent_deg") => generator.extent_deg = f64_val()?,
                ("generator", "radius_deg") => generator.radius_deg = f64_val()?,
                ("generator", "speed_min_mps") => generator.speed_min_mps = f64_val()?,
                ("generator", "speed_max_mps") => generator.speed_max_mps = f64_val()?,
                ("generator", "max_power_choices_w") => {
                    generator.max_power_choices_w = parse_list(value)
                        .map_err(|m| CliError::parse(file, n, format!("{key}: {m}")))?
                }
                ("generator", "seed") => generator.seed = u64_val()?,
                ("vehicle", "mass_kg") => cfg.vehicle.mass_kg = f64_val()?,
                ("vehicle", "gravity_mps2") => cfg.vehicle.gravity_mps2 = f64_val()?,
                ("vehicle", "rolling_coeff") => cfg.vehicle.rolling_coeff = f64_val()?,
                ("vehicle", "drag_coeff") => cfg.vehicle.drag_coeff = f64_val()?,
                ("vehicle", "frontal_area_m2") => cfg.vehicle.frontal_area_m2 = f64_val()?,
                ("vehicle", "air_density_kgm3") => cfg.vehicle.air_density_kgm3 = f64_val()?,
                ("vehicle", "efficiency") => cfg.vehicle.efficiency = f64_val()?,
                ("vehicle", "battery_capacity_ws") => cfg.vehicle.battery_capacity_ws = f64_val()?,
                ("vehicle", "soc_min") => cfg.vehicle.soc_min_frac = f64_val()?,
                ("vehicle", "soc_max") => cfg.vehicle.soc_max_frac = f64_val()?,
                ("priors", "queue_alpha") => cfg.priors.queue_alpha = f64_val()?,
                ("priors", "queue_beta") => cfg.priors.queue_beta = f64_val()?,
                ("priors", "charge_ln_pi") => cfg.priors.charge_ln_pi = f64_val()?,
                ("priors", "charge_gamma") => cfg.priors.charge_gamma = f64_val()?,
                ("priors", "charge_xi") => cfg.priors.charge_xi = f64_val()?,
                ("priors", "deficit_scale") => cfg.priors.deficit_scale = f64_val()?,
                ("experiment", "horizon") => cfg.horizon = u64_val()?,
                ("experiment", "seeds") => {
                    cfg.seeds = parse_list::<u64>(value)
                        .map_err(|m| CliError::parse(file, n, format!("{key}: {m}")))?
                }
                ("experiment", "policies") => {
                    let mut kinds = Vec::new();
                    for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        let kind = PolicyKind::parse(name).ok_or_else(|| {
                            CliError::parse(file, n, format!("unknown policy {name}"))
                        })?;
                        kinds.push(kind);
                    }
                    cfg.policies = kinds;
                }
                ("experiment", "epsilon_coeff") => cfg.epsilon_coeff = f64_val()?,
                ("experiment", "truncate_expected_loss") => {
                    cfg.truncate_expected_loss = bool_val()?
                }
                ("experiment", "output_dir") => cfg.output_dir = PathBuf::from(value),
                (sec, key) => {
                    return Err(CliError::parse(
                        file,
                        n,
                        format!("unknown key {key} in section [{sec}]"),
                    ))
                }
            }
        }
        if saw_generator {
            cfg.generator = Some(generator);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.horizon < 1 {
            return Err(CliError::Config("horizon must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("at least one seed is required".into()));
        }
        if self.policies.is_empty() {
            return Err(CliError::Config("at least one policy is required".into()));
        }
        if !(self.epsilon_coeff >= 0.0) {
            return Err(CliError::Config("epsilon_coeff must be >= 0".into()));
        }
        self.vehicle
            .validate()
            .map_err(|e| CliError::Config(format!("vehicle: {e}")))?;
        ChargePosterior::from_prior(&self.priors)
            .map_err(|e| CliError::Config(format!("priors: {e}")))?;
        if !(self.priors.queue_alpha > 0.0 && self.priors.queue_beta > 0.0) {
            return Err(CliError::Config("queue prior parameters must be positive".into()));
        }
        if let Some(g) = &self.generator {
            g.validate().map_err(|m| CliError::Config(format!("generator: {m}")))?;
        }
        if self.nodes_path.is_some() != self.edges_path.is_some() {
            return Err(CliError::Config(
                "instance requires both nodes and edges paths".into(),
            ));
        }
        Ok(())
    }

    /// True when the instance comes from files rather than the generator.
    pub fn has_instance_files(&self) -> bool {
        self.nodes_path.is_some()
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>, String> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(item.parse::<T>().map_err(|_| format!("bad list item {item}"))?);
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# experiment manifest
[generator]
node_count = 40
charger_fraction = 0.3
seed = 7

[vehicle]
battery_capacity_ws = 2.0e8

[priors]
queue_beta = 1800

[experiment]
horizon = 50
seeds = 1,2
policies = greedy, thompson
output_dir = results
";

    #[test]
    fn parses_sections_and_defaults() {
        let cfg = ExperimentConfig::parse(SAMPLE, Path::new("test.ini")).unwrap();
        let gen = cfg.generator.as_ref().unwrap();
        assert_eq!(gen.node_count, 40);
        assert_eq!(gen.charger_fraction, 0.3);
        assert_eq!(gen.seed, 7);
        // Untouched generator fields keep defaults.
        assert_eq!(gen.extent_deg, GeneratorSpec::default().extent_deg);
        assert_eq!(cfg.vehicle.battery_capacity_ws, 2.0e8);
        assert_eq!(cfg.vehicle.mass_kg, 13_700.0);
        assert_eq!(cfg.priors.queue_beta, 1800.0);
        assert_eq!(cfg.horizon, 50);
        assert_eq!(cfg.seeds, vec![1, 2]);
        assert_eq!(
            cfg.policies,
            vec![PolicyKind::Greedy, PolicyKind::ThompsonSampling]
        );
        assert_eq!(cfg.output_dir, PathBuf::from("results"));
        assert!(cfg.truncate_expected_loss);
    }

    #[test]
    fn rejects_unknown_keys_with_line_numbers() {
        let bad = "[experiment]\nhorizont = 5\n";
        let err = ExperimentConfig::parse(bad, Path::new("t.ini")).unwrap_err();
        match err {
            CliError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_policy_and_sections() {
        let bad = "[experiment]\npolicies = greedy, warp\n";
        assert!(ExperimentConfig::parse(bad, Path::new("t.ini")).is_err());
        let bad2 = "[wheels]\nn = 4\n";
        assert!(ExperimentConfig::parse(bad2, Path::new("t.ini")).is_err());
    }

    #[test]
    fn rejects_improper_priors() {
        let bad = "[priors]\ncharge_ln_pi = 20.0\n";
        let err = ExperimentConfig::parse(bad, Path::new("t.ini")).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn rejects_empty_seed_list_and_bad_horizon() {
        assert!(ExperimentConfig::parse("[experiment]\nseeds = ,\n", Path::new("t.ini")).is_err());
        assert!(
            ExperimentConfig::parse("[experiment]\nhorizon = 0\n", Path::new("t.ini")).is_err()
        );
    }

    #[test]
    fn default_config_is_valid() {
        ExperimentConfig::default().validate().unwrap();
    }
}
