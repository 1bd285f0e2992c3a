use super::state::EnvState;

/// Length of the observation vector.
pub const OBS_LEN: usize = 23;

/// Fixed-length policy input:
/// `[x, y, s_t, t_pause/limit, visited fraction, 3x3 visited, 3x3 flagged]`.
/// Positions are scaled to `[0, 1]`; out-of-grid neighbours count as visited
/// and unflagged. Neighbourhoods are row-major from `(x-1, y-1)`.
pub fn observe(state: &EnvState, pause_limit: u32) -> Vec<f64> {
    let scale = |v: usize, n: usize| if n > 1 { v as f64 / (n - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(OBS_LEN);
    out.push(scale(state.uav.x, state.cols));
    out.push(scale(state.uav.y, state.rows));
    out.push(if state.s_t { 1.0 } else { 0.0 });
    out.push(state.t_pause as f64 / pause_limit as f64);
    out.push(state.visited_count() as f64 / state.visited.len() as f64);
    for (flags, outside) in [(&state.visited, 1.0), (&state.flagged, 0.0)] {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let x = state.uav.x as i64 + dx;
                let y = state.uav.y as i64 + dy;
                let v = if x < 0 || y < 0 || x >= state.cols as i64 || y >= state.rows as i64 {
                    outside
                } else if flags[y as usize * state.cols + x as usize] {
                    1.0
                } else {
                    0.0
                };
                out.push(v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{reset, ScenarioConfig};

    #[test]
    fn fresh_reset_features() {
        let (_, s) = reset(&ScenarioConfig::default(), 0).unwrap();
        let o = observe(&s, 200);
        assert_eq!(o.len(), OBS_LEN);
        assert_eq!(o[4], 1.0 / 48.0);
        // Corner cell: the five out-of-grid neighbours read as visited, the
        // base cell itself is visited, the rest are not.
        assert_eq!(&o[5..14], &[1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(o[14..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_coverage_fraction() {
        let (_, mut s) = reset(&ScenarioConfig::default(), 0).unwrap();
        s.visited.iter_mut().for_each(|v| *v = true);
        assert_eq!(observe(&s, 200)[4], 1.0);
    }
}
