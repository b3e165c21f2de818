//! Principal-component projection of latent tables onto their two largest
//! variance axes, plus a small SVG scatter writer. The eigensolver is a
//! cyclic Jacobi iteration: latent widths are tiny (tens at most), so a
//! dense O(d^3) sweep converges in microseconds and stays dependency-free.

// Index loops keep the symmetric-matrix updates legible.
#![allow(clippy::needless_range_loop)]

use std::io::Write;
use std::path::Path;

use crate::errors::{At, CliError};

pub struct Projection {
    pub points: Vec<[f64; 2]>,
    /// Fraction of total variance captured by each axis; zeros for
    /// degenerate clouds with no spread.
    pub explained: [f64; 2],
}

/// Rotates the symmetric matrix `a` to (near-)diagonal form, accumulating
/// the eigenvectors as columns of the returned matrix.
fn jacobi_eigen(a: &mut [Vec<f64>]) -> Vec<Vec<f64>> {
    let d = a.len();
    let mut v = vec![vec![0.0; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = (0..d).map(|i| a[i][i].abs()).fold(f64::MIN_POSITIVE, f64::max);
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..d {
            for q in p + 1..d {
                off = off.max(a[p][q].abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let apq = a[p][q];
                a[p][p] -= t * apq;
                a[q][q] += t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for i in 0..d {
                    if i != p && i != q {
                        let aip = a[i][p];
                        let aiq = a[i][q];
                        a[i][p] = c * aip - s * aiq;
                        a[p][i] = a[i][p];
                        a[i][q] = s * aip + c * aiq;
                        a[q][i] = a[i][q];
                    }
                }
                for row in v.iter_mut() {
                    let vip = row[p];
                    let viq = row[q];
                    row[p] = c * vip - s * viq;
                    row[q] = s * vip + c * viq;
                }
            }
        }
    }
    v
}

pub fn pca_2d(rows: &[Vec<f64>]) -> Result<Projection, CliError> {
    if rows.len() < 2 {
        return Err(CliError::validation(format!(
            "need at least two designs to project, got {}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    if d < 2 {
        return Err(CliError::validation(format!(
            "need at least two latent dimensions to project, got {d}"
        )));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(CliError::validation(format!(
                "latent row {i} has width {}, expected {d}",
                r.len()
            )));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(CliError::validation(format!("latent row {i} has a non-finite entry")));
        }
    }

    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }

    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            let di = r[i] - mean[i];
            for j in i..d {
                cov[i][j] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= n;
            cov[j][i] = cov[i][j];
        }
    }

    let vectors = jacobi_eigen(&mut cov);
    let mut order: Vec<usize> = (0..d).collect();
    // Stable sort: equal eigenvalues keep index order, so ties break the
    // same way on every run.
    order.sort_by(|&i, &j| cov[j][j].partial_cmp(&cov[i][i]).expect("finite eigenvalues"));
    let total: f64 = (0..d).map(|i| cov[i][i].max(0.0)).sum();

    let mut axes = [vec![0.0; d], vec![0.0; d]];
    let mut explained = [0.0; 2];
    for (k, axis) in axes.iter_mut().enumerate() {
        let col = order[k];
        for (i, a) in axis.iter_mut().enumerate() {
            *a = vectors[i][col];
        }
        // Deterministic sign: the largest-magnitude loading points positive.
        let lead = axis
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                a.abs().partial_cmp(&b.abs()).expect("finite loadings")
            })
            .map(|(i, _)| i)
            .expect("non-empty axis");
        if axis[lead] < 0.0 {
            for a in axis.iter_mut() {
                *a = -*a;
            }
        }
        if total > 0.0 {
            explained[k] = cov[col][col].max(0.0) / total;
        }
    }

    let points = rows
        .iter()
        .map(|r| {
            let mut p = [0.0; 2];
            for (k, axis) in axes.iter().enumerate() {
                p[k] = r
                    .iter()
                    .zip(axis)
                    .zip(&mean)
                    .map(|((v, a), m)| (v - m) * a)
                    .sum();
            }
            p
        })
        .collect();

    Ok(Projection { points, explained })
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;

fn lerp_channel(a: u8, b: u8, t: f64) -> u8 {
    (f64::from(a) + (f64::from(b) - f64::from(a)) * t).round() as u8
}

/// Green (low score) to red (high score); scores are oriented so lower is
/// better before they get here.
fn color(t: f64) -> String {
    let (g, r) = ((0x1a, 0x96, 0x41), (0xd7, 0x19, 0x1c));
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp_channel(g.0, r.0, t),
        lerp_channel(g.1, r.1, t),
        lerp_channel(g.2, r.2, t)
    )
}

fn screen(value: f64, lo: f64, hi: f64, size: f64, flip: bool) -> f64 {
    let span = hi - lo;
    let t = if span > 0.0 { (value - lo) / span } else { 0.5 };
    let t = if flip { 1.0 - t } else { t };
    MARGIN + t * (size - 2.0 * MARGIN)
}

/// Scatter plot of projected points; `scores[i]` colors point `i`, `None`
/// renders grey.
pub fn write_svg(
    path: &Path,
    points: &[[f64; 2]],
    scores: &[Option<f64>],
) -> Result<(), CliError> {
    if points.len() != scores.len() {
        return Err(CliError::validation(format!(
            "{} points but {} scores",
            points.len(),
            scores.len()
        )));
    }
    let (mut xlo, mut xhi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        xlo = xlo.min(p[0]);
        xhi = xhi.max(p[0]);
        ylo = ylo.min(p[1]);
        yhi = yhi.max(p[1]);
    }
    let (mut slo, mut shi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in scores.iter().flatten() {
        slo = slo.min(*s);
        shi = shi.max(*s);
    }

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\" stroke=\"#cccccc\"/>\n"
    ));
    for (p, s) in points.iter().zip(scores) {
        let cx = screen(p[0], xlo, xhi, WIDTH, false);
        let cy = screen(p[1], ylo, yhi, HEIGHT, true);
        let fill = match s {
            Some(v) if shi > slo => color((v - slo) / (shi - slo)),
            Some(_) => color(0.0),
            None => "#999999".to_string(),
        };
        svg.push_str(&format!(
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"4\" fill=\"{fill}\" \
             fill-opacity=\"0.8\"/>\n"
        ));
    }
    svg.push_str("</svg>\n");

    let mut f = std::fs::File::create(path).at(path)?;
    f.write_all(svg.as_bytes()).at(path)?;
    f.flush().at(path)?;
    Ok(())
}
