//! CSV serialization with round-trip-safe doubles (17 significant digits).

use std::io::{self, Write};

use crate::bundles::BundlePair;
use crate::sweep::SweepRecord;

/// `{:.16e}`: seventeen significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_bundles_csv<W: Write>(mut w: W, bundles: &BundlePair) -> io::Result<()> {
    writeln!(w, "theta,r_u,r_s,d")?;
    for ((&theta, &ru), &rs) in bundles.grid().iter().zip(bundles.r_u()).zip(bundles.r_s()) {
        writeln!(w, "{},{},{},{}", fmt_f64(theta), fmt_f64(ru), fmt_f64(rs), fmt_f64(ru - rs))?;
    }
    Ok(())
}

pub const SWEEP_COLUMNS: &str = "t,gap,d_min,theta_c,L,dLdt_lemma,dLdt_fd,err_L,err_dLdt,status";

pub fn write_sweep_csv<W: Write>(mut w: W, records: &[SweepRecord]) -> io::Result<()> {
    writeln!(w, "{SWEEP_COLUMNS}")?;
    for r in records {
        let status = r.status.replace([',', '\n', '\r'], ";");
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.gap),
            fmt_f64(r.d_min),
            fmt_f64(r.theta_c),
            fmt_f64(r.l),
            fmt_f64(r.dldt_bundle),
            fmt_f64(r.dldt_fd),
            fmt_f64(r.err_l),
            fmt_f64(r.err_dldt),
            status
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubles_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.618033988749895, 1e-300, 6.02e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }
}
