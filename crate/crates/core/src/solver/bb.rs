use super::*;

/// Projected gradient descent with Barzilai–Borwein steps and Armijo
/// backtracking. Every trial point is scaled back onto the natural
/// constraint, so the objective is the ray maximum `Q²/4S`, whose gradient at
/// a projected point coincides with `∇T₀`. Search directions are
/// preconditioned by the inverse of the quadratic part.
pub struct BbProjected;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 50;
const TAU_RANGE: (f64, f64) = (1e-8, 1e4);

impl Optimizer for BbProjected {
    fn name(&self) -> &'static str {
        "bb-projected"
    }

    fn minimise(&self, config: &SolverConfig, c: &DsCoefficients) -> Result<SolveReport> {
        let (_, mut p) = start(config, c)?;
        let pre = preconditioner(c);
        let mut tau = match config.step {
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
            let slope = dir.inner(&p.grad)?;
            let j0 = p.energy.t0;
            let slack = 8.0 * f64::EPSILON * j0.abs();

            let mut step = tau;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let trial = axpy(&p.spec, -step, &dir);
                let parts = parts(&trial, c);
                let j = parts.projected_value();
                if j.is_finite() && j <= j0 - ARMIJO * step * slope + slack {
                    accepted = Some(parts.project(trial)?);
                    break;
                }
                step *= 0.5;
            }
            let Some(mut next) = accepted else {
                // No decrease is measurable at double precision.
                break;
            };
            iterations += 1;

            if let StepRule::AdaptiveBb = config.step {
                let s = sub(&next.spec, &p.spec);
                let y = sub(&next.grad, &p.grad);
                let sy = s.inner(&y)?;
                let yhy = y.map_symbol(&pre).inner(&y)?;
                tau = if sy > 0.0 && yhy > 0.0 {
                    (sy / yhy).clamp(TAU_RANGE.0, TAU_RANGE.1)
                } else {
                    (2.0 * step).min(TAU_RANGE.1)
                };
            }

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
