//! Direct KCL evaluation, independent of the assembled Jacobian.

use super::mna::{node_v, Device, Mna, GMIN};
use crate::diode;

/// Infinity norm of the net current leaving each node at a DC state `x`.
pub(crate) fn dc_kcl_residual(mna: &Mna, x: &[f64]) -> f64 {
    let mut net = vec![0.0; mna.n_nodes];
    let mut leave = |n: Option<usize>, i: f64| {
        if let Some(n) = n {
            net[n] += i;
        }
    };
    for d in &mna.devices {
        match *d {
            Device::Resistor { a, b, g } => {
                let i = g * (node_v(x, a) - node_v(x, b));
                leave(a, i);
                leave(b, -i);
            }
            Device::Capacitor { .. } => {}
            Device::Inductor { a, b, branch, .. } | Device::VSource { a, b, branch, .. } => {
                leave(a, x[branch]);
                leave(b, -x[branch]);
            }
            Device::ISource { a, b, wave } => {
                let i = wave.dc_value();
                leave(a, i);
                leave(b, -i);
            }
            Device::Diode {
                anode,
                junction,
                cathode,
                g_rs,
                ref card,
                ..
            } => {
                if let Some(g) = g_rs {
                    let i = g * (node_v(x, anode) - node_v(x, junction));
                    leave(anode, i);
                    leave(junction, -i);
                }
                let i = diode::diode_current(node_v(x, junction) - node_v(x, cathode), card);
                leave(junction, i);
                leave(cathode, -i);
            }
        }
    }
    for (n, v) in net.iter_mut().enumerate() {
        *v += GMIN * x[n];
    }
    net.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
