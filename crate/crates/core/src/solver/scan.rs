use super::*;

/// Preconditioned steepest descent on the ray maximum `Q²/4S` with a dense
/// line search: each step samples the objective along the search direction
/// on a geometric grid of step lengths, then refines the best sample by a
/// parabola in `log τ`. Shares no step-length logic with [`BbProjected`].
pub struct RayScan;

const SAMPLES: usize = 25;
const RATIO: f64 = 1.25;
const MAX_SHIFTS: usize = 6;

impl Optimizer for RayScan {
    fn name(&self) -> &'static str {
        "ray-scan"
    }

    fn minimise(&self, config: &SolverConfig, c: &DsCoefficients) -> Result<SolveReport> {
        let (_, mut p) = start(config, c)?;
        let pre = preconditioner(c);
        let mut centre: f64 = match config.step {
            StepRule::Fixed(t) => t,
            StepRule::AdaptiveBb => 0.5,
        };
        let mut trace = vec![TraceEntry {
            t0: p.energy.t0,
            residual: residual(&p),
        }];
        let mut iterations = 0;

        while iterations < config.max_iters {
            if trace.last().unwrap().residual <= config.tol_residual {
                break;
            }
            let dir = p.grad.map_symbol(&pre);
            let value = |tau: f64| ray_value(&energy_spectrum(&axpy(&p.spec, -tau, &dir), c));

            let mut best = (f64::INFINITY, 0.0, 0usize);
            let mut samples = [0.0; SAMPLES];
            let mut taus = [0.0; SAMPLES];
            for _ in 0..MAX_SHIFTS {
                for i in 0..SAMPLES {
                    taus[i] = centre * RATIO.powi(i as i32 - (SAMPLES / 2) as i32);
                    samples[i] = value(taus[i]);
                }
                let (i, &v) = samples
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap();
                best = (v, taus[i], i);
                if i == 0 {
                    centre /= RATIO.powi((SAMPLES / 2) as i32);
                } else if i == SAMPLES - 1 {
                    centre *= RATIO.powi((SAMPLES / 2) as i32);
                } else {
                    break;
                }
            }
            let (mut v, mut tau, i) = best;
            if i > 0 && i < SAMPLES - 1 {
                // Parabola through the three samples around the minimum, in log τ.
                let (fm, f0, fp) = (samples[i - 1], samples[i], samples[i + 1]);
                let den = fm - 2.0 * f0 + fp;
                if den > 0.0 {
                    let off = 0.5 * (fm - fp) / den;
                    let t = tau * RATIO.powf(off);
                    let vt = value(t);
                    if vt < v {
                        v = vt;
                        tau = t;
                    }
                }
            }
            if !(v < p.energy.t0) {
                break;
            }
            centre = tau;
            let trial = axpy(&p.spec, -tau, &dir);
            let mut next = parts(&trial, c).project(trial)?;
            iterations += 1;
            if config.recentre_every > 0 && iterations % config.recentre_every == 0 {
                recentre(&mut next, &mut []);
            }
            check_collapse(&next, config.collapse_floor)?;
            p = next;
            trace.push(TraceEntry {
                t0: p.energy.t0,
                residual: residual(&p),
            });
        }
        Ok(finish(p, c, config, self.name(), iterations, trace))
    }
}
