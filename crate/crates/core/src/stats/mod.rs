//! Statistical tests for the monthly panel.

mod adf;
mod bh;
pub mod descriptive;
mod granger;
mod grid;
pub mod linalg;
mod mann_whitney;
mod trim;

pub use adf::{adf_p_value, adf_test, default_adf_lags, AdfResult};
pub use bh::{bh_adjust, bh_adjust_at, AdjustedTest};
pub use granger::{granger_f_test, granger_pair, granger_panel, GrangerFTest, GrangerResult, PanelTestOptions};
pub use grid::{
    edge_list, group_tests, run_grid, stationarity_table, GrangerEdge, GridConfig, GridRow, GroupTestRow,
    DEFAULT_GRID_ST_VARS,
    NonStationaryPolicy, StationarityRow,
};
pub use mann_whitney::{mann_whitney_u, MannWhitney};
pub use trim::trim_outliers;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("singular or collinear design matrix")]
    Singular,
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} usable projects, got {got}")]
    TooFewProjects { needed: usize, got: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Panel(#[from] crate::panel::PanelError),
}

pub type Result<T> = std::result::Result<T, StatsError>;
