use super::{change, SolverConfig, SolverReport};
use crate::error::{Error, Result};
use crate::shrink::tsvt_with_norm;
use crate::tensor::{Mask3, Tensor3};
use crate::tprod::tnn;

/// Low-rank tensor completion: `min ‖X‖  s.t.  P_Ω(X) = P_Ω(M)`.
///
/// Splits `X = Z`; `Z` takes the thresholding step and `X` copies the
/// observed entries of `m` and `Z` elsewhere, so the returned tensor matches
/// `m` exactly on `mask`.
pub fn lrtc(m: &Tensor3, mask: &Mask3, cfg: &SolverConfig) -> Result<(Tensor3, SolverReport)> {
    cfg.validate()?;
    if mask.dims() != m.dims() {
        return Err(Error::DimMismatch(format!(
            "mask {:?} vs tensor {:?}",
            mask.dims(),
            m.dims()
        )));
    }
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }
    let observed = m.project_mask(mask)?;
    let mut report = SolverReport::default();
    let n3 = m.dims().2 as f64;
    if mask.is_all() {
        report.record(0.0, tnn(m)? / n3);
        report.converged = true;
        return Ok((m.clone(), report));
    }

    let flags = mask.data();
    let mut pen = cfg.penalty();
    let mut x = observed.clone();
    let (n1, n2, depth) = m.dims();
    let mut z = Tensor3::zeros(n1, n2, depth);
    let mut y = Tensor3::zeros(n1, n2, depth);

    for _ in 0..cfg.max_iter {
        let mu = pen.mu;
        let mut arg = x.clone();
        arg.axpy(1.0 / mu, &y);
        let (z_new, _) = tsvt_with_norm(&arg, 1.0 / mu)?;

        let mut x_new = z_new.clone();
        x_new.axpy(-1.0 / mu, &y);
        for ((v, &keep), &obs) in x_new.data_mut().iter_mut().zip(flags).zip(observed.data()) {
            if keep {
                *v = obs;
            }
        }

        let resid = &x_new - &z_new;
        let r_inf = resid.max_abs();
        let chg = change(&x_new, &x).max(change(&z_new, &z)).max(r_inf);
        let feasible = {
            let mut f = z_new.clone();
            for ((v, &keep), &obs) in f.data_mut().iter_mut().zip(flags).zip(observed.data()) {
                if keep {
                    *v = obs;
                }
            }
            f
        };
        report.record(r_inf, tnn(&feasible)? / n3);
        x = x_new;
        z = z_new;
        if chg <= cfg.tol {
            report.converged = true;
            break;
        }
        y.axpy(mu, &resid);
        pen.grow();
    }
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{low_tubal_rank, missing_mask};

    #[test]
    fn fully_observed_is_identity() {
        let m = low_tubal_rank((6, 5, 3), 2, 1).unwrap();
        let (x, report) = lrtc(&m, &Mask3::filled(6, 5, 3, true), &SolverConfig::default()).unwrap();
        assert_eq!(x, m);
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn observed_entries_are_exact() {
        let m = low_tubal_rank((12, 12, 4), 2, 2).unwrap();
        let mask = missing_mask((12, 12, 4), 0.6, 3).unwrap();
        let (x, _) = lrtc(&m, &mask, &SolverConfig::default()).unwrap();
        assert_eq!(x.project_mask(&mask).unwrap(), m.project_mask(&mask).unwrap());
    }

    #[test]
    fn rejects_empty_mask() {
        let m = Tensor3::zeros(2, 2, 2);
        assert_eq!(
            lrtc(&m, &Mask3::filled(2, 2, 2, false), &SolverConfig::default()).unwrap_err(),
            Error::EmptyMask
        );
    }
}
