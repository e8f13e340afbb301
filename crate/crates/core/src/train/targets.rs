//! λ-return targets by backward recursion.

use crate::error::{Error, Result};

/// `G_{T-1} = r_{T-1} + γ v_T`, `G_t = r_t + γ[(1-λ) v_{t+1} + λ G_{t+1}]`
/// (0-based: `values[t]` is the value of the state the `t`-th action was taken
/// in, `values.len() == rewards.len() + 1`). Where `dones[t]` is set nothing
/// is bootstrapped past step `t`.
pub fn compute_targets(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<Vec<f64>> {
    let t_len = rewards.len();
    if t_len == 0 {
        return Err(Error::Config("cannot compute targets for an empty trajectory".into()));
    }
    if values.len() != t_len + 1 {
        return Err(Error::DimensionMismatch {
            expected: t_len + 1,
            got: values.len(),
        });
    }
    if dones.len() != t_len {
        return Err(Error::DimensionMismatch {
            expected: t_len,
            got: dones.len(),
        });
    }
    let mut g = vec![0.0; t_len];
    let last = t_len - 1;
    g[last] = rewards[last] + if dones[last] { 0.0 } else { gamma * values[t_len] };
    for t in (0..last).rev() {
        g[t] = rewards[t]
            + if dones[t] {
                0.0
            } else {
                gamma * ((1.0 - lambda) * values[t + 1] + lambda * g[t + 1])
            };
    }
    Ok(g)
}
