//! Built-in experiments, one per figure. Block sizes are shrunk to desk
//! scale (superoperator dimension at most 256); every coupling ratio and
//! evolution time is kept.

use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

pub struct Preset {
    pub name: &'static str,
    pub figure: &'static str,
    pub description: &'static str,
    build: fn() -> Value,
}

impl Preset {
    pub fn document(&self) -> Value {
        let mut doc = (self.build)();
        doc["output_dir"] = json!(format!("out/{}", self.name));
        doc
    }

    pub fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_value(self.document())
    }
}

// Chaotic three-spin model; 6+6 qubits in the figure, 4+4 here.
fn fig2() -> Value {
    json!({
        "model": {"kind": "xxx", "jzz": 0.1, "jz": 0.1, "jxxx": 2.0},
        "layout": {"n_s": 4, "n_b": 4},
        "t": 100.0,
        "analyses": {"spectrum": true, "histogram": true, "overlaps": true}
    })
}

// Interacting ergodic chain; 6+10 in the figure, 3+4 here.
fn fig3() -> Value {
    json!({
        "model": {"kind": "aah", "jzz": 0.3, "jz": 0.1},
        "layout": {"n_s": 3, "n_b": 4},
        "t": 100.0,
        "analyses": {"spectrum": true, "histogram": true}
    })
}

// Ergodic-to-chaotic sweep in J_xxx; 5+5 in the figure, 4+4 here.
fn fig4() -> Value {
    json!({
        "model": {"kind": "xxx", "jzz": 0.1, "jz": 0.1, "jxxx": 0.0},
        "layout": {"n_s": 4, "n_b": 4},
        "t": 1000.0,
        "analyses": {"ep": true},
        "sweep": {"parameter": "jxxx", "start": 0.0, "end": 0.1, "points": 101}
    })
}

// Localised chain at J_z = 5 J_2, J_zz = 0; 6+10 in the figure, 3+5 here.
fn fig5() -> Value {
    json!({
        "model": {"kind": "aah", "jzz": 0.0, "jz": 5.0},
        "layout": {"n_s": 3, "n_b": 5},
        "t": 200.0,
        "analyses": {"spectrum": true, "histogram": true}
    })
}

// PXP in the blockade subspace; 8+12 in the figure, 5+5 here (dim 144,
// 13 system configurations).
fn fig6() -> Value {
    json!({
        "model": {"kind": "pxp", "rabi": 1.0},
        "layout": {"n_s": 5, "n_b": 5},
        "t": 200.0,
        "analyses": {"spectrum": true, "histogram": true, "overlaps": true}
    })
}

// Mutual-information decay, chaotic base with an MBL variant; 6+6 in the
// figure, 4+4 here.
fn fig7() -> Value {
    json!({
        "model": {"kind": "xxx", "jzz": 0.1, "jz": 0.1, "jxxx": 2.0},
        "layout": {"n_s": 4, "n_b": 4},
        "t": 100.0,
        "n_k": 30,
        "analyses": {"qmi": true},
        "variants": [
            {"label": "chaotic", "set": {"jxxx": 2.0, "jz": 0.1}},
            {"label": "ergodic", "set": {"jxxx": 0.0, "jz": 0.1}},
            {"label": "mbl", "set": {"jxxx": 0.0, "jz": 5.0}}
        ]
    })
}

// Phase scan over J_z / J_2; 6+8 in the figure, 3+4 here.
fn fig8() -> Value {
    json!({
        "model": {"kind": "xxx", "jzz": 0.1, "jz": 0.1, "jxxx": 0.0},
        "layout": {"n_s": 3, "n_b": 4},
        "t": 100.0,
        "n_k": 20,
        "analyses": {"imbalance": true},
        "sweep": {"parameter": "jz", "start": 0.1, "end": 5.0, "points": 15}
    })
}

// XY anisotropy sweep J_xx from J_yy down to 0.8 J_yy; 5+5 in the figure,
// 4+4 here.
fn fig9() -> Value {
    json!({
        "model": {"kind": "xx", "jxx": 1.0, "jyy": 1.0, "jzz": 0.1, "jz": 0.1},
        "layout": {"n_s": 4, "n_b": 4},
        "t": 1000.0,
        "analyses": {"ep": true},
        "sweep": {"parameter": "jxx", "start": 1.0, "end": 0.8, "points": 41}
    })
}

pub const PRESETS: [Preset; 8] = [
    Preset { name: "fig2", figure: "Fig. 2", description: "chaotic spectrum, histogram and overlaps", build: fig2 },
    Preset { name: "fig3", figure: "Fig. 3", description: "interacting ergodic spectrum", build: fig3 },
    Preset { name: "fig4", figure: "Fig. 4", description: "J_xxx sweep, bands and exceptional points", build: fig4 },
    Preset { name: "fig5", figure: "Fig. 5", description: "MBL spectrum and the lambda ~ -1 cluster", build: fig5 },
    Preset { name: "fig6", figure: "Fig. 6", description: "PXP spectrum and scar overlaps", build: fig6 },
    Preset { name: "fig7", figure: "Fig. 7", description: "mutual information trajectories", build: fig7 },
    Preset { name: "fig8", figure: "Fig. 8", description: "J_z phase scan of S and B+1", build: fig8 },
    Preset { name: "fig9", figure: "Fig. 9", description: "XY-anisotropy sweep, exceptional points", build: fig9 },
];

pub fn list_presets() -> &'static [Preset] {
    &PRESETS
}

pub fn find(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        Error::Config(format!("unknown preset '{name}' (available: {})", names.join(", ")))
    })
}
