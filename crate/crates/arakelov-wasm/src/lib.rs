//! Browser demo bindings: script verification, theta-norm heatmaps and the
//! genus-1 Green's-function lab, exposed through wasm-bindgen for the
//! static page in `www/`.

use num_complex::Complex64;
use wasm_bindgen::prelude::*;

use arakelov::dsl;
use arakelov::spectral::{theta_norm, PeriodMatrix, TruncationParams};
use arakelov::torus::{
    beta_from_omega, bump_omega, green_for_omega, omega_can, torus_lab_report, GridPoint, Solver,
    Torus,
};

fn err_json(e: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": e.to_string() }).to_string()
}

/// Parse and run a `.chk` script; returns the report as JSON (or an
/// `{"error": ...}` object).
#[wasm_bindgen]
pub fn run_script(source: &str) -> String {
    match dsl::parse(source) {
        Ok(script) => dsl::run(&script, None).to_json(),
        Err(e) => err_json(e),
    }
}

/// Squared theta norm over the fundamental domain of `C/(Z + tau Z)` at
/// genus one: an n x n row-major field sampled at `z = x + tau y`. The norm
/// is lattice invariant, so the heatmap tiles seamlessly.
#[wasm_bindgen]
pub fn theta_norm_field(
    tau_re: f64,
    tau_im: f64,
    n: usize,
    radius: u32,
) -> Result<Vec<f64>, JsError> {
    let tau = Complex64::new(tau_re, tau_im);
    let pm = PeriodMatrix::genus1(tau).map_err(JsError::from)?;
    let p = TruncationParams {
        lattice_radius: radius.max(4),
        tol: 1e-5,
        ..Default::default()
    };
    let mut out = Vec::with_capacity(n * n);
    for ix in 0..n {
        for iy in 0..n {
            let z = Complex64::new(ix as f64 / n as f64, 0.0) + tau * (iy as f64 / n as f64);
            let v = theta_norm(&pm, &[z], &p).map_err(JsError::from)?;
            out.push(v.value.re);
        }
    }
    Ok(out)
}

/// Green's-function field `g_omega(P, .)` on the torus grid (flat or
/// bump-deformed omega), row-major.
#[wasm_bindgen]
pub fn torus_green_field(
    tau_re: f64,
    tau_im: f64,
    n: usize,
    bump: bool,
    px: usize,
    py: usize,
) -> Result<Vec<f64>, JsError> {
    let torus = Torus::new(Complex64::new(tau_re, tau_im)).map_err(JsError::from)?;
    let solver = Solver::new(torus, n).map_err(JsError::from)?;
    let omega = if bump {
        bump_omega(&torus, n).map_err(JsError::from)?.0
    } else {
        omega_can(&torus, n).map_err(JsError::from)?
    };
    let g =
        green_for_omega(&solver, &omega, GridPoint::new(px % n, py % n)).map_err(JsError::from)?;
    Ok(g.values().to_vec())
}

/// The beta potential of the bump-deformed form, for display next to the
/// Green's field.
#[wasm_bindgen]
pub fn torus_beta_field(tau_re: f64, tau_im: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let torus = Torus::new(Complex64::new(tau_re, tau_im)).map_err(JsError::from)?;
    let solver = Solver::new(torus, n).map_err(JsError::from)?;
    let omega = bump_omega(&torus, n).map_err(JsError::from)?.0;
    let beta = beta_from_omega(&solver, &omega).map_err(JsError::from)?;
    Ok(beta.values().to_vec())
}

/// Full lab residual report as JSON.
#[wasm_bindgen]
pub fn torus_lab_json(tau_re: f64, tau_im: f64, n: usize, bump: bool) -> String {
    match torus_lab_report(Complex64::new(tau_re, tau_im), n, bump) {
        Ok(rep) => serde_json::to_string(&rep).unwrap_or_else(err_json),
        Err(e) => err_json(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_runs_through_the_binding() {
        let json = run_script("ctx q=2 N=1 rules=adjunction; check lambda_n(1) == lambda_n(0);");
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["entries"][0]["status"], "Pass");
    }

    #[test]
    fn fields_have_the_right_shape() {
        let f = theta_norm_field(0.0, 1.0, 16, 6).unwrap();
        assert_eq!(f.len(), 16 * 16);
        let g = torus_green_field(0.0, 1.0, 32, true, 0, 0).unwrap();
        assert_eq!(g.len(), 32 * 32);
    }
}
