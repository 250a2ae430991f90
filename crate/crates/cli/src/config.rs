//! Run configuration: defaults, optional TOML/JSON file, then flag overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use radioplan::calibration::{OptimizerKind, DEFAULT_EPOCHS, DEFAULT_LR};
use radioplan::feasible::DEFAULT_MOUNT_OFFSET_M;
use radioplan::planner::{
    DEFAULT_ES_STEP_M, DEFAULT_Q_BO, DEFAULT_Q_INIT, DEFAULT_RS_GROUPS, DEFAULT_XI,
};
use radioplan::radiomap::{DEFAULT_ALPHA_WEIGHT, DEFAULT_RTH_DBM};
use radioplan::scene::DEFAULT_TX_POWER_DBM;
use radioplan::{EngineConfig, Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_GRID_RES_M: f64 = 2.0;
pub const DEFAULT_N_NEW: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: Option<PathBuf>,
    pub measurements: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub grid_res_m: f64,
    pub rth_dbm: f64,
    pub alpha: f64,
    pub n_new: usize,
    pub tx_power_dbm: f64,
    pub tx_power_list: Vec<f64>,
    pub es_step_m: f64,
    pub rs_groups: usize,
    pub budget_init: usize,
    pub budget_bo: usize,
    pub xi: f64,
    pub mount_offset_m: f64,
    pub epochs: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    pub batch_size: Option<usize>,
    pub engine: EngineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: None,
            measurements: None,
            out_dir: PathBuf::from("out"),
            seed: 0,
            grid_res_m: DEFAULT_GRID_RES_M,
            rth_dbm: DEFAULT_RTH_DBM,
            alpha: DEFAULT_ALPHA_WEIGHT,
            n_new: DEFAULT_N_NEW,
            tx_power_dbm: DEFAULT_TX_POWER_DBM,
            tx_power_list: Vec::new(),
            es_step_m: DEFAULT_ES_STEP_M,
            rs_groups: DEFAULT_RS_GROUPS,
            budget_init: DEFAULT_Q_INIT,
            budget_bo: DEFAULT_Q_BO,
            xi: DEFAULT_XI,
            mount_offset_m: DEFAULT_MOUNT_OFFSET_M,
            epochs: DEFAULT_EPOCHS,
            lr: DEFAULT_LR,
            optimizer: OptimizerKind::Adam,
            batch_size: None,
            engine: EngineConfig::default(),
        }
    }
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML or JSON config file
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub measurements: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid resolution a in meters
    #[arg(long)]
    pub grid_res: Option<f64>,
    #[arg(long)]
    pub rth_dbm: Option<f64>,
    /// Coverage weight in T = alpha·C + S
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n_new: Option<usize>,
    #[arg(long)]
    pub tx_power_dbm: Option<f64>,
    /// Comma-separated powers for a transmit-power sweep (plan only)
    #[arg(long, value_delimiter = ',')]
    pub tx_power_list: Option<Vec<f64>>,
    #[arg(long)]
    pub es_step_m: Option<f64>,
    #[arg(long)]
    pub rs_groups: Option<usize>,
    #[arg(long)]
    pub budget_init: Option<usize>,
    #[arg(long)]
    pub budget_bo: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// adam or sgd
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
        }
    }

    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = &args.$flag { cfg.$field = v.clone().into(); })*
            };
        }
        set!(
            scene => scene,
            measurements => measurements,
            out_dir => out_dir,
            seed => seed,
            grid_res => grid_res_m,
            rth_dbm => rth_dbm,
            alpha => alpha,
            n_new => n_new,
            tx_power_dbm => tx_power_dbm,
            tx_power_list => tx_power_list,
            es_step_m => es_step_m,
            rs_groups => rs_groups,
            budget_init => budget_init,
            budget_bo => budget_bo,
            epochs => epochs,
            lr => lr,
            optimizer => optimizer,
            batch_size => batch_size,
        );
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grid_res_m", self.grid_res_m),
            ("es_step_m", self.es_step_m),
            ("lr", self.lr),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Argument(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("rth_dbm", self.rth_dbm),
            ("alpha", self.alpha),
            ("xi", self.xi),
        ] {
            if !v.is_finite() {
                return Err(Error::Argument(format!("{name} must be finite")));
            }
        }
        if self.alpha < 0.0 || self.xi < 0.0 || self.mount_offset_m < 0.0 {
            return Err(Error::Argument(
                "alpha, xi and mount_offset_m must be >= 0".into(),
            ));
        }
        let (lo, hi) = radioplan::scene::TX_POWER_BOUNDS_DBM;
        for p in std::iter::once(&self.tx_power_dbm).chain(&self.tx_power_list) {
            if !(lo..=hi).contains(p) {
                return Err(Error::Argument(format!(
                    "tx power {p} dBm outside [{lo}, {hi}]"
                )));
            }
        }
        if self.n_new == 0 || self.rs_groups == 0 || self.epochs == 0 || self.budget_init == 0 {
            return Err(Error::Argument(
                "n_new, rs_groups, epochs and budget_init must be >= 1".into(),
            ));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Argument("batch_size must be >= 1".into()));
        }
        self.engine.validate()
    }

    pub fn scene_path(&self) -> Result<&Path> {
        self.scene.as_deref().ok_or_else(|| {
            Error::Argument("a scene file is required (--scene or `scene` in the config)".into())
        })
    }

    pub fn measurements_path(&self) -> Result<&Path> {
        self.measurements.as_deref().ok_or_else(|| {
            Error::Argument(
                "a measurements file is required (--measurements or `measurements` in the config)"
                    .into(),
            )
        })
    }
}
