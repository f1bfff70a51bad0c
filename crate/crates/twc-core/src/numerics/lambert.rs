use std::f64::consts::E;

/// Principal branch of the Lambert W function: the solution of w e^w = z
/// with w >= -1, defined for z >= -1/e.
///
/// Halley iteration; the seed is ln z - ln ln z for large z, z/(1+z) in the
/// midrange and the square-root expansion near the branch point.
pub fn lambert_w0(z: f64) -> Result<f64, LambertWError> {
    if !z.is_finite() {
        return Err(LambertWError::OutOfDomain(z));
    }
    let branch_point = -1.0 / E;
    if z < branch_point - 1e-12 {
        return Err(LambertWError::OutOfDomain(z));
    }
    if z.abs() < 1e-300 {
        return Ok(0.0);
    }

    let mut w = if z > E {
        let lz = z.ln();
        lz - lz.ln()
    } else if z > -0.25 {
        z / (1.0 + z)
    } else {
        -1.0 + (2.0 * (E * z + 1.0).max(0.0)).sqrt()
    };

    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - f * (w + 2.0) / (2.0 * wp1);
        if denom == 0.0 {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.abs() <= 1e-16 * (1.0 + w.abs()) {
            let residual = w * w.exp() - z;
            if residual.abs() <= 1e-12 * (1.0 + z.abs()) {
                return Ok(w);
            }
        }
    }
    // One last residual check; Halley converges in a handful of steps
    // everywhere except within rounding of the branch point.
    if (w * w.exp() - z).abs() <= 1e-10 * (1.0 + z.abs()) {
        Ok(w)
    } else {
        Err(LambertWError::NoConvergence(z))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LambertWError {
    #[error("Lambert W is undefined for z = {0} on the principal branch")]
    OutOfDomain(f64),
    #[error("Lambert W iteration failed to converge for z = {0}")]
    NoConvergence(f64),
}
