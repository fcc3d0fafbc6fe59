//! Per-command parameters. Each command has a resolved struct (the JSON
//! schema of its `params` object, with defaults) and a flag struct where every
//! field is optional so that only flags actually given override the config.

use serde::{Deserialize, Serialize};

macro_rules! params {
    (@ty $ty:ty, $default:expr) => { $ty };
    (@ty $ty:ty) => { Option<$ty> };
    (@default $default:expr) => { $default };
    (@default) => { None };
    (
        $(#[$doc:meta])*
        $name:ident / $flags:ident {
            $( $(#[$meta:meta])* $field:ident : $ty:ty $(= $default:expr)? ),* $(,)?
        }
    ) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $name {
            $( pub $field: params!(@ty $ty $(, $default)?), )*
        }

        impl Default for $name {
            fn default() -> Self {
                $name { $( $field: params!(@default $($default)?), )* }
            }
        }

        #[derive(Clone, Debug, Default, clap::Args, Serialize)]
        pub struct $flags {
            $(
                $(#[$meta])*
                #[arg(long)]
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

params! {
    /// Deterministic orbit of a letter sequence.
    OrbitParams / OrbitFlags {
        /// Start point as x_re,x_im,y_re,y_im
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        start: Vec<f64> = vec![0.0, 0.0, 5.0, 0.0],
        /// Letters in the order they are applied, e.g. "aabA"; overrides --letter/--steps
        letters: String = String::new(),
        /// Letter repeated --steps times when --letters is empty
        letter: String = "a".into(),
        steps: usize = 10,
        max_norm: f64 = 1e12,
    }
}

params! {
    /// Drift of the reduced word length along random walks.
    DriftParams / DriftFlags {
        /// Walk length
        #[arg(short = 'n')]
        n: usize = 10_000,
        trials: usize = 400,
        /// Use equal weights, ignoring --weights
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        uniform: bool = false,
        /// Weights of a,b,A,B
        #[arg(value_delimiter = ',')]
        weights: Vec<f64> = vec![0.25; 4],
    }
}

params! {
    /// Sampled cone doubling and transition checks.
    ConesParams / ConesFlags {
        /// Cone aperture; searched when omitted
        aperture: f64,
        /// Cone inner radius; searched when omitted
        inner_radius: f64,
        /// Samples per cone
        samples: usize = 10_000,
    }
}

params! {
    /// Growth of reduced words on the escaping collar.
    CollarVerifyParams / CollarVerifyFlags {
        /// Collar angular gap; defaults to a quarter of the direction separation
        beta: f64,
        /// Collar inner radius; searched when omitted
        r_u: f64,
        aperture: f64,
        inner_radius: f64,
        /// Word length
        k: usize = 5,
        samples: usize = 1000,
    }
}

params! {
    /// One random chain, optionally with ergodic averages and a defect estimate.
    ChainParams / ChainFlags {
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        start: Vec<f64> = vec![0.1, 0.0, 0.2, 0.0],
        steps: usize = 1000,
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        uniform: bool = false,
        #[arg(value_delimiter = ',')]
        weights: Vec<f64> = vec![0.25; 4],
        guard: f64 = 1e12,
        /// Test function for running averages: one, ball:<r>, norm-clamp:<c>
        observable: String,
        /// Bins per axis of the occupation histogram used for the stationarity defect
        defect_bins: usize,
        pushforward_samples: usize = 1000,
    }
}

params! {
    /// Fraction of chains remaining in balls.
    MassEscapeParams / MassEscapeFlags {
        /// Start sample: collar, box, point or filled-julia
        starts: String = "collar".into(),
        count: usize = 10_000,
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        start: Vec<f64> = vec![0.0; 4],
        /// Half-width of the box used by the box and filled-julia samples
        half_width: f64 = 1.0,
        beta: f64,
        r_u: f64,
        steps: usize = 200,
        #[arg(value_delimiter = ',')]
        radii: Vec<f64> = vec![10.0],
        trials: usize = 1,
        #[arg(num_args = 0..=1, default_missing_value = "true")]
        uniform: bool = false,
        #[arg(value_delimiter = ',')]
        weights: Vec<f64> = vec![0.25; 4],
        /// Act by h1 and h1 translated by this complex number instead of the rotation conjugate
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        translate: Vec<f64>,
    }
}

params! {
    /// Filled Julia set verdicts for h1 on a point sample.
    FilledJuliaParams / FilledJuliaFlags {
        budget: usize = 50,
        /// grid or random
        sample: String = "grid".into(),
        per_axis: usize = 9,
        count: usize = 10_000,
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        center: Vec<f64> = vec![0.0; 4],
        half_width: f64 = 2.0,
    }
}

params! {
    /// Sampled comparison of two filled Julia sets.
    DisjointnessParams / DisjointnessFlags {
        /// rotated, translate, identical or map (the config's second_map)
        partner: String = "rotated".into(),
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        translate: Vec<f64> = vec![100.0, 100.0],
        budget: usize = 50,
        sample: String = "grid".into(),
        per_axis: usize = 9,
        count: usize = 10_000,
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        center: Vec<f64> = vec![0.0; 4],
        half_width: f64 = 2.0,
    }
}

params! {
    /// Escape-time raster of a two-real-dimensional slice.
    RenderParams / RenderFlags {
        /// forward, biorbit or group
        mode: String = "forward".into(),
        width: usize = 256,
        height: usize = 256,
        /// real-plane, y-line or custom (uses --u and --v)
        slice: String = "real-plane".into(),
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        anchor: Vec<f64> = vec![0.0; 4],
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        u: Vec<f64>,
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        v: Vec<f64>,
        /// Half-extents along u and v
        #[arg(value_delimiter = ',')]
        extent: Vec<f64> = vec![4.0, 4.0],
        /// Step budget and value of pixels that never escape (at most 65535)
        cap: u32 = 255,
        escape_radius: f64 = 1e6,
        /// Group mode: sampled words per pixel
        words: usize = 8,
        /// Group mode: length of each sampled word
        word_length: usize = 32,
    }
}

params! {
    /// Word-averaged collar mass against the collar mass on chain samples.
    WordAverageParams / WordAverageFlags {
        /// Largest word length (at most 8)
        n_max: usize = 2,
        chains: usize = 100,
        steps: usize = 20,
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        start: Vec<f64> = vec![1.5, 0.0, 1.5, 0.0],
        #[arg(value_delimiter = ',')]
        weights: Vec<f64> = vec![0.25; 4],
        beta: f64,
        r_u: f64,
    }
}
