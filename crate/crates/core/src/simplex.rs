//! Nelder-Mead downhill simplex for small, unconstrained problems.

#[derive(Debug, Clone)]
pub(crate) struct SimplexResult<const N: usize> {
    pub x: [f64; N],
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `start`, with an initial simplex spanned by
/// `step` along each axis. Converged once every vertex lies within `tol`
/// of the best one (max-norm).
pub(crate) fn minimize<const N: usize, F>(
    f: F,
    start: [f64; N],
    step: [f64; N],
    tol: f64,
    max_iter: usize,
) -> SimplexResult<N>
where
    F: Fn(&[f64; N]) -> f64,
{
    let mut pts: Vec<[f64; N]> = Vec::with_capacity(N + 1);
    pts.push(start);
    for i in 0..N {
        let mut p = start;
        p[i] += step[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(&f).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut order: Vec<usize> = (0..=N).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i]).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(pts[0].iter()).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if spread < tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; N];
        for p in &pts[..N] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / N as f64;
            }
        }
        let along = |t: f64| -> [f64; N] {
            let mut out = [0.0; N];
            for i in 0..N {
                out[i] = centroid[i] + t * (pts[N][i] - centroid[i]);
            }
            out
        };

        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < vals[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                pts[N] = expanded;
                vals[N] = fe;
            } else {
                pts[N] = reflected;
                vals[N] = fr;
            }
            continue;
        }
        if fr < vals[N - 1] {
            pts[N] = reflected;
            vals[N] = fr;
            continue;
        }
        let (contracted, fc) = if fr < vals[N] {
            let c = along(-0.5);
            let fc = f(&c);
            (c, fc)
        } else {
            let c = along(0.5);
            let fc = f(&c);
            (c, fc)
        };
        if fc < vals[N].min(fr) {
            pts[N] = contracted;
            vals[N] = fc;
            continue;
        }
        // shrink toward the best vertex
        let best = pts[0];
        for k in 1..=N {
            for i in 0..N {
                pts[k][i] = best[i] + 0.5 * (pts[k][i] - best[i]);
            }
            vals[k] = f(&pts[k]);
        }
    }

    let best = (0..=N)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap_or(0);
    SimplexResult {
        x: pts[best],
        value: vals[best],
        iterations,
        converged,
    }
}
