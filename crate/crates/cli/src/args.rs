//! Command-line flags. A TOML config file is a table `command = "<name>"`
//! plus one key per long flag, spelled exactly like the flag.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "heatctrl",
    version,
    about = "Nonnegative boundary control of 1D heat equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the explicit scheme for given data.
    Simulate(SimulateArgs),
    /// Steady states and a continuation path between two of them.
    Steady(SteadyArgs),
    /// Stair-case steering along a path of steady states.
    Staircase(StaircaseArgs),
    /// Ride a reference trajectory, then steer in the final window.
    Stabilize(StabilizeArgs),
    /// Minimal-time estimate by bisection on the horizon.
    Mintime(MintimeArgs),
    /// Closed-form waiting-time bound between constant states.
    Bound(BoundArgs),
    /// Duality residual, transposition defect and certificate flux.
    AdjointCheck(AdjointCheckArgs),
    /// L1 mass and sparsity of feasible controls above the minimal time.
    SweepMass(SweepMassArgs),
    /// Growth of the first mode under random nonnegative controls.
    Counterexample(CounterexampleArgs),
    /// Bounds, both minimal-time problems and the mass sweep in one report.
    Recipe(RecipeArgs),
    /// Execute the command described by a TOML config file.
    Run(RunArgs),
}

#[derive(Debug, Parser)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

/// Solver knobs shared by every command that steers.
#[derive(Debug, Clone, clap::Args)]
pub struct SteerFlags {
    /// Relative L2 terminal tolerance.
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    /// Iteration budget per solve.
    #[arg(long, default_value_t = 5000)]
    pub budget: usize,
    /// Initial Tikhonov weight.
    #[arg(long, default_value_t = 1e-3)]
    pub rho: f64,
    /// Search direction: gauss-newton or gradient.
    #[arg(long, default_value = "gauss-newton")]
    pub method: String,
}

#[derive(Debug, Parser)]
pub struct SimulateArgs {
    /// Nonlinearity: zero|linear, sin_pi, potential:<c>.
    #[arg(long, default_value = "zero")]
    pub f: String,
    /// Initial datum: <v>, const:<v>, sine:<a>,<b> (a + b sin(pi x)) or file:<path>.
    #[arg(long, default_value = "const:0")]
    pub y0: String,
    /// Control: const:<v>, const:<left>,<right> or file:<path> (CSV t,u_left,u_right).
    #[arg(long, default_value = "const:0")]
    pub u: String,
    /// Optional target profile for the terminal mismatch.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub nx: usize,
    /// Horizon; ignored when the control comes from a file.
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    /// Time steps; defaults to mesh ratio 0.4.
    #[arg(long)]
    pub nt: Option<usize>,
    /// Trajectory CSV `t,x,y`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct SteadyArgs {
    #[arg(long, default_value = "sin_pi")]
    pub f: String,
    /// Boundary values at the start: <v> or <left>,<right>.
    #[arg(long, default_value = "1")]
    pub from: String,
    /// Boundary values at the end.
    #[arg(long, default_value = "2")]
    pub to: String,
    #[arg(long, default_value_t = 4)]
    pub steps: usize,
    #[arg(long, default_value_t = 20)]
    pub nx: usize,
    /// Path CSV `s,x,y`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Path metadata JSON.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct StaircaseArgs {
    #[arg(long, default_value = "sin_pi")]
    pub f: String,
    #[arg(long, default_value = "1")]
    pub from: String,
    #[arg(long, default_value = "2")]
    pub to: String,
    /// Initial number of path segments.
    #[arg(long, default_value_t = 4)]
    pub steps: usize,
    #[arg(long, default_value_t = 20)]
    pub nx: usize,
    /// Horizon of each segment.
    #[arg(long, default_value_t = 1.0)]
    pub t_step: f64,
    /// Time steps per segment; defaults to mesh ratio 0.4.
    #[arg(long)]
    pub nt_step: Option<usize>,
    #[arg(long, default_value_t = 6)]
    pub max_refinement: usize,
    #[command(flatten)]
    pub steer: SteerFlags,
    /// Control CSV `t,u_left,u_right`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Result metadata JSON.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct StabilizeArgs {
    #[arg(long, default_value = "sin_pi")]
    pub f: String,
    #[arg(long, default_value = "sine:1,1")]
    pub y0: String,
    /// Boundary values of the steady reference state.
    #[arg(long, default_value = "2")]
    pub ybar: String,
    /// Boundary floor; defaults to the smaller reference boundary value.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long = "T", default_value_t = 3.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 20)]
    pub nx: usize,
    #[arg(long)]
    pub nt: Option<usize>,
    #[command(flatten)]
    pub steer: SteerFlags,
    /// Control CSV `t,u_left,u_right`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Result JSON.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

/// The minimal-time problem as flags.
#[derive(Debug, Clone, clap::Args)]
pub struct ProblemFlags {
    #[arg(long, default_value = "zero")]
    pub f: String,
    /// Initial datum: <v>, const:<v>, sine:<a>,<b> or file:<path>.
    #[arg(long, default_value = "1")]
    pub y0: String,
    /// Steady target: same forms as y0.
    #[arg(long, default_value = "5")]
    pub y1: String,
    #[arg(long, default_value_t = 20)]
    pub nx: usize,
    #[arg(long, default_value_t = 4000.0)]
    pub nt_per_unit: f64,
    #[arg(long, default_value_t = 0.0)]
    pub bracket_lo: f64,
    #[arg(long, default_value_t = 0.2)]
    pub bracket_hi: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random restarts next to the warm start.
    #[arg(long, default_value_t = 2)]
    pub restarts: usize,
    #[command(flatten)]
    pub steer: SteerFlags,
}

#[derive(Debug, Parser)]
pub struct MintimeArgs {
    #[command(flatten)]
    pub problem: ProblemFlags,
    #[arg(long, default_value_t = 5e-3)]
    pub tol_t: f64,
    /// Summary JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Control CSV at the smallest feasible horizon.
    #[arg(long)]
    pub control_out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct BoundArgs {
    /// increasing or decreasing; inferred from the data when absent.
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub y0: f64,
    #[arg(long, default_value_t = 5.0)]
    pub y1: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct AdjointCheckArgs {
    #[arg(long, default_value_t = 20)]
    pub nx: usize,
    #[arg(long, default_value_t = 200)]
    pub nt: usize,
    #[arg(long = "T", default_value_t = 0.1)]
    pub horizon: f64,
    /// Final datum: sine or two-mode (-alpha sin(pi x) + beta sin(3 pi x)).
    #[arg(long, default_value = "sine")]
    pub phi: String,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Boundary flux CSV `t,flux_left,flux_right`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct SweepMassArgs {
    #[command(flatten)]
    pub problem: ProblemFlags,
    /// Comma-separated gaps above the minimal time.
    #[arg(long, default_value = "0.2,0.1,0.05,0.02,0.01")]
    pub offsets: String,
    /// Minimal time to sweep from; estimated by bisection when absent.
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long, default_value_t = 5e-3)]
    pub tol_t: f64,
    /// Sweep CSV `T,mass,sparsity,feasible`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct CounterexampleArgs {
    /// Potential c in y_t - y_xx + c y = 0; must be below -pi^2.
    #[arg(long, default_value_t = -2.0 * std::f64::consts::PI * std::f64::consts::PI, allow_negative_numbers = true)]
    pub c: f64,
    #[arg(long = "T", default_value_t = 0.2)]
    pub horizon: f64,
    #[arg(long, default_value_t = 20)]
    pub nx: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Largest control amplitude drawn.
    #[arg(long, default_value_t = 100.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct RecipeArgs {
    #[arg(long, default_value_t = 20)]
    pub nx: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5e-3)]
    pub tol_t: f64,
    #[arg(long, default_value_t = 5000)]
    pub budget: usize,
    /// Directory for summary.json and the CSVs.
    #[arg(long, default_value = "recipe-out")]
    pub out_dir: PathBuf,
}
