use rand::Rng;

use crate::env::{BridgeEnv, TraceRow};
use crate::error::Result;
use crate::ppo::Policy;

/// Plays one episode from the environment's current state, recording every step.
pub fn record_episode<R: Rng + ?Sized>(env: &mut BridgeEnv, policy: Policy, rng: &mut R) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    loop {
        let obs = env.observation();
        let action = policy.choose(&obs, &env.action_mask(), rng)?;
        let out = env.step(action)?;
        let s = env.state();
        rows.push(TraceRow {
            step: s.step,
            x: s.uav.x,
            y: s.uav.y,
            action,
            s_t: s.s_t,
            reward: out.reward,
            cracks_detected_cum: s.detected.len(),
        });
        if out.done {
            return Ok(rows);
        }
    }
}

/// Text frames of a trace on a `cols` x `rows` grid, `y` growing upwards.
/// `U` is the UAV (`X` while traffic blocks its cell), `o` a cell passed
/// through, `.` a cell not reached yet.
pub fn render_replay(trace: &[TraceRow], cols: usize, rows: usize) -> String {
    let mut seen = vec![false; cols * rows];
    seen[0] = true;
    let mut out = String::new();
    let mut total = 0i64;
    for row in trace {
        if row.x < cols && row.y < rows {
            seen[row.y * cols + row.x] = true;
        }
        total += row.reward.total;
        out.push_str(&format!(
            "step {} action {} reward {} total {} cracks {}\n",
            row.step, row.action, row.reward.total, total, row.cracks_detected_cum
        ));
        for y in (0..rows).rev() {
            for x in 0..cols {
                let c = if (x, y) == (row.x, row.y) {
                    if row.s_t { 'X' } else { 'U' }
                } else if seen[y * cols + x] {
                    'o'
                } else {
                    '.'
                };
                out.push(c);
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
