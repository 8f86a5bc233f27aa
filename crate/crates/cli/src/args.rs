use apkr::kernel::KernelConfig;
use apkr::solvers::SolverConfig;
use clap::Args;

/// Problem size of a generated instance.
#[derive(Args, Clone, Debug)]
pub struct Shape {
    /// Rows of A (data points for kernels).
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Columns of A.
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    /// Target condition number of generated matrices.
    #[arg(long, default_value_t = 10.0)]
    pub kappa: f64,
}

/// Sketch and solver constants.
#[derive(Args, Clone, Debug)]
pub struct Constants {
    /// Multiplier in the preconditioning sketch size c·ε⁻²·d·ln(n/δ).
    #[arg(long, default_value_t = apkr::sketch::DEFAULT_EMBEDDING_CONSTANT)]
    pub embedding_constant: f64,
    /// Distortion the preconditioning sketch is sized for.
    #[arg(long, default_value_t = 0.1)]
    pub eps_ose: f64,
    /// Sampled sketch with exactly this many rows instead of the default size.
    #[arg(long)]
    pub sketch_rows: Option<usize>,
    /// Known condition number of A, skipping the estimate.
    #[arg(long)]
    pub kappa_hint: Option<f64>,
    /// Kernel factor rows per degree: c_m·β·l²/ε².
    #[arg(long, default_value_t = 4.0)]
    pub c_m: f64,
    /// Taylor degree: c_q·(r² + ln(n/ε)).
    #[arg(long, default_value_t = 2.0)]
    pub c_q: f64,
    /// Cap on kernel factor rows per degree.
    #[arg(long, default_value_t = 4096)]
    pub max_block_rows: usize,
    /// Rank bound β used for every kernel degree.
    #[arg(long)]
    pub beta: Option<usize>,
    /// Distortion of the kernel solver's inner sketch.
    #[arg(long, default_value_t = 0.01)]
    pub eps0: f64,
    /// Inner kernel sketch with exactly this many rows.
    #[arg(long)]
    pub inner_rows: Option<usize>,
    /// Accept kernel data rows of norm above 1.
    #[arg(long)]
    pub allow_large_radius: bool,
}

impl Constants {
    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            eps_ose: self.eps_ose,
            embedding_constant: self.embedding_constant,
            sketch_rows: self.sketch_rows,
            ..SolverConfig::default()
        }
    }

    pub fn kernel(&self) -> KernelConfig {
        KernelConfig {
            c_q: self.c_q,
            c_m: self.c_m,
            max_block_rows: self.max_block_rows,
            beta_hint: self.beta,
            allow_large_radius: self.allow_large_radius,
            eps0: self.eps0,
            inner_rows: self.inner_rows,
            embedding_constant: self.embedding_constant,
            ..KernelConfig::default()
        }
    }
}
