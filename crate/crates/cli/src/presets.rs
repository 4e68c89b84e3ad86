//! Built-in scenarios. Each is a TOML document accepted by
//! [`crate::config::parse_config`] on its own.

/// A named built-in configuration.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

const FIG3: &str = r#"
description = "Two narrow Gaussian slits at rest: strong spreading, trajectories follow the fringes"
assumptions = [
    "slit centers at -5 and +5",
    "sigma0 = 0.3 so the packets overlap strongly by the screen time",
    "screen at t = 5 in natural units, binned over [-12, 12] in 0.2-wide bins",
]

[units]
hbar = 1.0
mass = 1.0
omega = 1.0

[[slits]]
center = -5.0
sigma0 = 0.3
v0 = 0.0
phase_offset = 0.0

[[slits]]
center = 5.0
sigma0 = 0.3
v0 = 0.0
phase_offset = 0.0

[time]
t0 = 0.0
t_screen = 5.0

[integrator]
dt = 0.01

[ensemble]
count = 100000
seed = 1

[screen]
x_min = -12.0
x_max = 12.0
bins = 120

[grid]
x_min = -12.0
x_max = 12.0
points = 481
times = 51

[bundle]
count = 40
record_every = 10
"#;

const FIG2: &str = r#"
description = "Two wide Gaussian slits with opposite transverse velocities: weak spreading, converging beams"
assumptions = [
    "slit centers at -5 and +5",
    "sigma0 = 2 so the packets barely spread by the screen time",
    "v0 = +1 at the left slit and -1 at the right slit, so the beams meet on the axis at t = 5",
    "screen at t = 5 in natural units, binned over [-12, 12] in 0.2-wide bins",
]

[units]
hbar = 1.0
mass = 1.0
omega = 1.0

[[slits]]
center = -5.0
sigma0 = 2.0
v0 = 1.0
phase_offset = 0.0

[[slits]]
center = 5.0
sigma0 = 2.0
v0 = -1.0
phase_offset = 0.0

[time]
t0 = 0.0
t_screen = 5.0

[integrator]
dt = 0.01

[ensemble]
count = 100000
seed = 1

[screen]
x_min = -12.0
x_max = 12.0
bins = 120

[grid]
x_min = -12.0
x_max = 12.0
points = 481
times = 51

[bundle]
count = 40
record_every = 10
"#;

const SINGLE_SLIT: &str = r#"
description = "One Gaussian slit: streamlines scale with the packet width"
assumptions = ["slit at the origin with sigma0 = 0.5"]

[[slits]]
center = 0.0
sigma0 = 0.5

[time]
t0 = 0.0
t_screen = 5.0

[ensemble]
count = 20000
seed = 1

[bundle]
count = 20
record_every = 10
"#;

const TRIPLE_SLIT: &str = r#"
description = "Three equal Gaussian slits at rest"
assumptions = ["slit centers at -5, 0 and +5 with sigma0 = 0.5"]

[[slits]]
center = -5.0
sigma0 = 0.5

[[slits]]
center = 0.0
sigma0 = 0.5

[[slits]]
center = 5.0
sigma0 = 0.5

[time]
t0 = 0.0
t_screen = 5.0

[ensemble]
count = 20000
seed = 1

[bundle]
count = 40
record_every = 10
"#;

const SWITCHING: &str = r#"
description = "One slit open from the start; a second slit opens mid-flight and kicks the ensemble"
assumptions = [
    "first slit at -3 with sigma0 = 1 open from t = 0",
    "second slit at +3 with sigma0 = 1 and phase offset pi/2 opens at t = 2 as a fresh packet",
    "screen at t = 5 in natural units",
]

[[slits]]
center = -3.0
sigma0 = 1.0

[time]
t0 = 0.0
t_screen = 5.0

[ensemble]
count = 20000
seed = 1

[[events]]
time = 2.0
action = "open"
rebirth = "fresh_width"

[events.slit]
center = 3.0
sigma0 = 1.0
v0 = 0.0
phase_offset = 1.5707963267948966

[bundle]
count = 20
record_every = 10
"#;

const TWO_PARTICLE: &str = r#"
description = "Two particles in a product state, each behind its own double slit"
assumptions = [
    "the joint wave function factorises, so each particle follows its own field",
    "the companion has twice the mass",
]

[[slits]]
center = -3.0
sigma0 = 0.5

[[slits]]
center = 3.0
sigma0 = 0.5

[time]
t0 = 0.0
t_screen = 4.0

[ensemble]
count = 20000
seed = 1

[bundle]
count = 20
record_every = 10

[[companions]]
mass = 2.0

[[companions.slits]]
center = -2.0
sigma0 = 0.5

[[companions.slits]]
center = 2.0
sigma0 = 0.5
"#;

const PRESETS: &[Preset] = &[
    Preset {
        name: "fig2",
        description: "converging beams from two wide slits with opposite velocities",
        text: FIG2,
    },
    Preset {
        name: "fig3",
        description: "fringe-following trajectories from two narrow slits at rest",
        text: FIG3,
    },
    Preset {
        name: "single-slit",
        description: "one Gaussian slit",
        text: SINGLE_SLIT,
    },
    Preset {
        name: "triple-slit",
        description: "three Gaussian slits",
        text: TRIPLE_SLIT,
    },
    Preset {
        name: "switching",
        description: "second slit opened mid-flight, with momentum-kick statistics",
        text: SWITCHING,
    },
    Preset {
        name: "two-particle",
        description: "two particles in a product state, each in its own double slit",
        text: TWO_PARTICLE,
    },
];

pub fn list_presets() -> &'static [Preset] {
    PRESETS
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
