use std::f64::consts::PI;
use std::io::{self, Write};

use clap::{Args, ValueEnum};
use signcorr::asymptotics::{
    are_spatial, asv_spatial_corr, ges_spatial_corr, if_spatial_corr, v0, ws_factor, ws_matrix, wv0_matrix,
};
use signcorr::numerics::eig_sym2;

use crate::error::{CliError, CliResult, EXIT_OK};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Quantity {
    Asv,
    Are,
    If,
    Ges,
    Ws,
    Wv0,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(value_enum)]
    pub quantity: Quantity,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rho: f64,
    /// Marginal scale ratio √(v₁₁/v₂₂).
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Marginal excess kurtosis.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub kappa: f64,
    /// Direction angle of the contamination point, in radians.
    #[arg(long, default_value_t = PI / 4.0, allow_negative_numbers = true)]
    pub theta: f64,
    /// Emit plot data as CSV instead of a single value.
    #[arg(long)]
    pub grid: bool,
}

fn check(args: &TheoryArgs) -> CliResult<()> {
    if !(args.rho.abs() < 1.0) {
        return Err(CliError::Config(format!(
            "field `rho`: {} is outside (-1, 1)",
            args.rho
        )));
    }
    if !(args.a > 0.0 && args.a.is_finite()) {
        return Err(CliError::Config(format!("field `a`: {} is not positive", args.a)));
    }
    if !(args.kappa > -2.0) {
        return Err(CliError::Config(format!(
            "field `kappa`: {} is not above -2",
            args.kappa
        )));
    }
    Ok(())
}

fn rho_grid() -> impl Iterator<Item = f64> {
    (-99..=99).map(|i| i as f64 / 100.0)
}

const A_GRID: [f64; 5] = [1.0, 1.5, 2.0, 3.0, 5.0];

pub fn run(args: &TheoryArgs) -> CliResult<u8> {
    check(args)?;
    let mut out = io::stdout().lock();
    let (a, rho) = (args.a, args.rho);
    if args.grid {
        match args.quantity {
            Quantity::Asv | Quantity::Are => {
                let q = if matches!(args.quantity, Quantity::Asv) {
                    "asv"
                } else {
                    "are"
                };
                writeln!(out, "rho,a,{q}")?;
                for &a in &A_GRID {
                    for r in rho_grid() {
                        let v = match args.quantity {
                            Quantity::Asv => asv_spatial_corr(r, a),
                            _ => are_spatial(r, a, args.kappa),
                        };
                        writeln!(out, "{r},{a},{v}")?;
                    }
                }
            }
            Quantity::Ges => {
                writeln!(out, "rho,a,ges")?;
                for r in rho_grid() {
                    writeln!(out, "{r},{a},{}", ges_spatial_corr(a, r)?)?;
                }
            }
            Quantity::If => {
                writeln!(out, "theta,x1,x2,if")?;
                for k in 0..360 {
                    let t = 2.0 * PI * k as f64 / 360.0;
                    let x = [t.cos(), t.sin()];
                    writeln!(out, "{t},{},{},{}", x[0], x[1], if_spatial_corr(x, a, rho)?)?;
                }
            }
            Quantity::Ws => {
                writeln!(out, "rho,a,lambda1,lambda2,ws_factor")?;
                for r in rho_grid() {
                    let eig = eig_sym2(&v0(a, r))?;
                    let f = ws_factor(eig.lambda1, eig.lambda2)?;
                    writeln!(out, "{r},{a},{},{},{f}", eig.lambda1, eig.lambda2)?;
                }
            }
            Quantity::Wv0 => {
                writeln!(out, "rho,a,var_a,cov_a_rho,var_rho")?;
                for r in rho_grid() {
                    let w = wv0_matrix(a, r)?;
                    writeln!(out, "{r},{a},{},{},{}", w.var_a(), w.cov_a_rho(), w.var_rho())?;
                }
            }
        }
        return Ok(EXIT_OK);
    }
    match args.quantity {
        Quantity::Asv => writeln!(out, "{}", asv_spatial_corr(rho, a))?,
        Quantity::Are => writeln!(out, "{}", are_spatial(rho, a, args.kappa))?,
        Quantity::Ges => writeln!(out, "{}", ges_spatial_corr(a, rho)?)?,
        Quantity::If => writeln!(
            out,
            "{}",
            if_spatial_corr([args.theta.cos(), args.theta.sin()], a, rho)?
        )?,
        Quantity::Ws => {
            let eig = eig_sym2(&v0(a, rho))?;
            let w = ws_matrix(eig.lambda1, eig.lambda2, &eig.u)?;
            for row in w.0 {
                writeln!(out, "{},{},{},{}", row[0], row[1], row[2], row[3])?;
            }
        }
        Quantity::Wv0 => {
            let w = wv0_matrix(a, rho)?;
            writeln!(out, "{},{}", w.var_a(), w.cov_a_rho())?;
            writeln!(out, "{},{}", w.cov_a_rho(), w.var_rho())?;
        }
    }
    Ok(EXIT_OK)
}
