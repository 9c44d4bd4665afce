//! Deterministic counter-based random streams for simulation noise.
//!
//! Every primitive random vector in a simulation is addressed by
//! `(seed, run, kind, t)` and is a pure function of that key. This gives
//! common random numbers across strategy profiles: two simulations of the same
//! scenario with the same seed see identical noise regardless of which
//! controller acts, so pathwise cost comparisons are meaningful. Streams never
//! share state, so runs can be drawn in parallel and in any order.

/// Which primitive signal a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    /// Initial state x_1.
    InitialState,
    /// Process noise w_t.
    ProcessNoise,
    /// Observation noise v_t.
    ObservationNoise,
    /// Model-generator draws (not a simulation signal).
    Generator,
}

impl StreamKind {
    fn tag(self) -> u64 {
        match self {
            StreamKind::InitialState => 1,
            StreamKind::ProcessNoise => 2,
            StreamKind::ObservationNoise => 3,
            StreamKind::Generator => 4,
        }
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer; a bijective avalanche mix on u64.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A stream of standard normal draws addressed by `(seed, run, kind, t)`.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    state: u64,
    spare: Option<f64>,
}

impl NoiseStream {
    pub fn new(seed: u64, run: u64, kind: StreamKind, t: usize) -> Self {
        // chain the key components through the mixer so that nearby keys
        // land in unrelated states
        let mut k = mix(seed ^ 0xA076_1D64_78BD_642F);
        k = mix(k ^ run.wrapping_mul(0xE703_7ED1_A0B4_28DB));
        k = mix(k ^ kind.tag().wrapping_mul(0x8EBC_6AF0_9C88_C6E3));
        k = mix(k ^ (t as u64).wrapping_mul(0x5899_65CC_7537_4CC3));
        NoiseStream {
            state: k,
            spare: None,
        }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform draw in (0, 1].
    fn next_uniform_open_closed(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
    }

    /// Uniform draw in [0, 1).
    fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64) * (1.0 / 9007199254740992.0)
    }

    /// One standard normal draw (Box-Muller; pairs are cached).
    pub fn next_standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_uniform_open_closed();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// `len` independent standard normal draws.
    pub fn standard_normal_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.next_standard_normal()).collect()
    }
}
