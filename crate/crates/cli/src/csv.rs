//! Trajectory CSV with fixed `%.17g` number formatting and LF endings.

use std::io::{self, Write};

use effham_core::Trajectory;

/// C `printf("%.17g", v)`.
pub fn fmt_g17(v: f64) -> String {
    const P: i32 = 17;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= P {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (P - 1 - exp) as usize, v)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn header(dim: usize, reservoirs: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=dim).map(|i| format!("x{i}")));
    cols.extend((1..=reservoirs).map(|i| format!("w{i}")));
    cols.extend(["H", "K", "div"].map(String::from));
    cols.join(",")
}

/// Writes the header and one row per sample; missing series print `nan`.
pub fn write_trajectory(out: &mut impl Write, traj: &Trajectory, dim: usize, reservoirs: usize) -> io::Result<()> {
    writeln!(out, "{}", header(dim, reservoirs))?;
    let opt = |s: &Option<Vec<f64>>, k: usize| s.as_ref().and_then(|v| v.get(k)).copied().unwrap_or(f64::NAN);
    let mut line = String::new();
    for (k, s) in traj.samples.iter().enumerate() {
        line.clear();
        line.push_str(&fmt_g17(s.t));
        for v in &s.x {
            line.push(',');
            line.push_str(&fmt_g17(*v));
        }
        for j in 0..reservoirs {
            line.push(',');
            line.push_str(&fmt_g17(traj.reservoirs.get(j).and_then(|w| w.get(k)).copied().unwrap_or(f64::NAN)));
        }
        for series in [&traj.series_h, &traj.series_k, &traj.series_div] {
            line.push(',');
            line.push_str(&fmt_g17(opt(series, k)));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}
