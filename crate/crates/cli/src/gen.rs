use crate::output::Outcome;
use crate::row;
use apkr::io::write_matrix;
use apkr::oracle::{gen_capped_rows, gen_matrix, spectrum};
use apkr::Result;
use clap::Args;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    /// Target condition number.
    #[arg(long, default_value_t = 10.0)]
    pub kappa: f64,
    /// Draw rows uniformly in the ball of this radius instead (kernel data).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Matrix file; a `.csv` suffix writes CSV. Metadata goes to `<path>.json`.
    #[arg(long)]
    pub path: PathBuf,
}

#[derive(Serialize)]
struct Metadata {
    path: String,
    rows: usize,
    cols: usize,
    seed: u64,
    generator: &'static str,
    kappa_target: Option<f64>,
    radius: Option<f64>,
    kappa: f64,
    sigma_min: f64,
    sigma_max: f64,
}

pub fn run(args: &GenArgs, seed: u64) -> Result<Outcome> {
    let (a, generator) = match args.radius {
        Some(r) => (gen_capped_rows(args.n, args.d, r, seed), "capped_rows"),
        None => (gen_matrix(args.n, args.d, args.kappa, seed)?, "spectrum"),
    };
    write_matrix(&args.path, &a)?;
    let sp = spectrum(&a);
    let meta = Metadata {
        path: args.path.display().to_string(),
        rows: a.nrows(),
        cols: a.ncols(),
        seed,
        generator,
        kappa_target: args.radius.is_none().then_some(args.kappa),
        radius: args.radius,
        kappa: sp.kappa,
        sigma_min: sp.sigma_min,
        sigma_max: sp.sigma_max,
    };
    let mut sidecar = args.path.clone().into_os_string();
    sidecar.push(".json");
    std::fs::write(&sidecar, serde_json::to_string_pretty(&meta).expect("metadata serializes"))?;
    let rows = vec![row!(
        "rows" => meta.rows,
        "cols" => meta.cols,
        "seed" => seed,
        "kappa" => meta.kappa,
    )];
    Ok(Outcome::new(meta, rows, true))
}
