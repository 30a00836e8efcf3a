//! Scan grids and the P_e(T) dataset with its CSV form.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{binomial_stderr, nominal_stderr};
use crate::error::{domain, Error, Result};

pub const CSV_HEADER: &str = "T_us,window,n_selected,n_e,p_e,stderr";

/// One probe delay and the window it belongs to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanPoint {
    pub t: f64,
    pub window: usize,
}

/// `start, start + step, …` up to `end` inclusive (within rounding).
pub fn scan_grid(start: f64, end: f64, step: f64, window: usize) -> Result<Vec<ScanPoint>> {
    if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
        return domain(format!("invalid scan grid {start}..{end} step {step}"));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| ScanPoint { t: start + k as f64 * step, window }).collect())
}

/// Concatenated grids, window ids numbered from 0 in the given order.
pub fn scan_windows(windows: &[(f64, f64)], step: f64) -> Result<Vec<ScanPoint>> {
    let mut out = Vec::new();
    for (i, &(a, b)) in windows.iter().enumerate() {
        out.extend(scan_grid(a, b, step, i)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataPoint {
    /// Probe delay (s).
    pub t: f64,
    pub window: usize,
    pub n_selected: u64,
    pub n_e: u64,
    pub p_e: f64,
    pub stderr: f64,
}

impl DataPoint {
    /// Point from detection counts; `n_selected = 0` gives NaN estimates.
    pub fn counted(at: ScanPoint, n_e: u64, n_selected: u64) -> Result<Self> {
        let (p_e, stderr) = if n_selected == 0 {
            (f64::NAN, f64::NAN)
        } else {
            (n_e as f64 / n_selected as f64, binomial_stderr(n_e, n_selected)?)
        };
        Ok(Self { t: at.t, window: at.window, n_selected, n_e, p_e, stderr })
    }

    /// Point carrying an exactly computed probability, with counts and
    /// error bar of a nominal sample of `n` selected sequences.
    pub fn exact(at: ScanPoint, p: f64, n: u64) -> Self {
        Self {
            t: at.t,
            window: at.window,
            n_selected: n,
            n_e: (p.clamp(0.0, 1.0) * n as f64).round() as u64,
            p_e: p,
            stderr: nominal_stderr(p, n),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunDataset {
    pub points: Vec<DataPoint>,
}

/// Nine significant digits, fixed notation for moderate magnitudes.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci.split_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-5..=8).contains(&exp) {
        format!("{:.*}", (8 - exp) as usize, x)
    } else {
        sci
    }
}

impl RunDataset {
    pub fn from_exact(points: &[ScanPoint], p: &[f64], n: u64) -> Self {
        Self { points: points.iter().zip(p).map(|(&s, &p)| DataPoint::exact(s, p, n)).collect() }
    }

    pub fn window_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.points.iter().map(|p| p.window).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                format_sig(p.t * 1e6),
                p.window,
                p.n_selected,
                p.n_e,
                format_sig(p.p_e),
                format_sig(p.stderr)
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            Some(h) => return Err(Error::Parse(format!("unexpected CSV header {h:?}"))),
            None => return Err(Error::Parse("empty CSV".into())),
        }
        let mut points = Vec::new();
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 6 {
                return Err(Error::Parse(format!("line {}: expected 6 fields, got {}", i + 2, f.len())));
            }
            let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", i + 2));
            let p = DataPoint {
                t: f[0].parse::<f64>().map_err(|_| bad("T_us"))? * 1e-6,
                window: f[1].parse().map_err(|_| bad("window"))?,
                n_selected: f[2].parse().map_err(|_| bad("n_selected"))?,
                n_e: f[3].parse().map_err(|_| bad("n_e"))?,
                p_e: f[4].parse().map_err(|_| bad("p_e"))?,
                stderr: f[5].parse().map_err(|_| bad("stderr"))?,
            };
            if p.n_e > p.n_selected {
                return Err(Error::Parse(format!("line {}: n_e exceeds n_selected", i + 2)));
            }
            points.push(p);
        }
        Ok(Self { points })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.5), "0.500000000");
        assert_eq!(format_sig(20.0), "20.0000000");
        assert_eq!(format_sig(123.456789012), "123.456789");
        assert_eq!(format_sig(0.045825756949558), "0.0458257569");
        assert_eq!(format_sig(9.9999999999), "10.0000000");
        assert_eq!(format_sig(1.5e-9), "1.50000000e-9");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(f64::NAN), "NaN");
        for x in [1.0 / 3.0, 7.123456789e-4, 710.0, 2.0e11] {
            let y: f64 = format_sig(x).parse().unwrap();
            assert!(((y - x) / x).abs() < 1e-8);
        }
    }

    #[test]
    fn grid_is_inclusive() {
        let g = scan_grid(20e-6, 100e-6, 0.5e-6, 0).unwrap();
        assert_eq!(g.len(), 161);
        assert!((g[160].t - 100e-6).abs() < 1e-15);
        let w = scan_windows(&[(0.0, 2e-6), (5e-6, 6e-6)], 1e-6).unwrap();
        assert_eq!(w.iter().map(|p| p.window).collect::<Vec<_>>(), vec![0, 0, 0, 1, 1]);
        assert!(scan_grid(1.0, 0.0, 0.1, 0).is_err());
        assert!(scan_grid(0.0, 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let pts = scan_grid(70e-6, 72e-6, 1e-6, 2).unwrap();
        let mut d = RunDataset {
            points: vec![
                DataPoint::counted(pts[0], 30, 100).unwrap(),
                DataPoint::counted(pts[1], 0, 0).unwrap(),
                DataPoint::exact(pts[2], 0.25, 2000),
            ],
        };
        let text = d.to_csv();
        assert!(text.starts_with("T_us,window,n_selected,n_e,p_e,stderr\n70.0000000,2,100,30,0.300000000,"));
        assert!(text.contains(",0,0,NaN,NaN\n"));
        let back = RunDataset::from_csv(&text).unwrap();
        assert_eq!(back.to_csv(), text);
        assert!(back.points[1].p_e.is_nan());
        d.points.truncate(1);
        assert!((back.points[0].t - d.points[0].t).abs() < 1e-15);
        assert!(RunDataset::from_csv("T,window\n").is_err());
        assert!(RunDataset::from_csv(&format!("{CSV_HEADER}\n1,0,5,6,1.2,0.1\n")).is_err());
    }
}
