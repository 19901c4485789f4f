use serde::Serialize;

/// Per-replication sums that pool by addition.
pub trait Tally:
    Clone + Default + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self>
{
}

/// Declares a tally struct of `f64` sums with field-wise `+` and `-`.
macro_rules! tally {
    ($(#[$meta:meta])* $name:ident { $($field:ident),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
        pub struct $name {
            $(pub $field: f64,)*
        }

        impl std::ops::Add for $name {
            type Output = Self;
            fn add(self, o: Self) -> Self {
                $name { $($field: self.$field + o.$field,)* }
            }
        }

        impl std::ops::Sub for $name {
            type Output = Self;
            fn sub(self, o: Self) -> Self {
                $name { $($field: self.$field - o.$field,)* }
            }
        }

        impl std::iter::Sum for $name {
            fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
                iter.fold(Self::default(), |a, b| a + b)
            }
        }

        impl $crate::stats::jackknife::Tally for $name {}
    };
}
pub(crate) use tally;

/// Point estimate with a 95% jackknife half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            half_width: 0.0,
        }
    }

    pub fn rel_error(&self, target: f64) -> f64 {
        (self.value - target).abs() / target.abs()
    }
}

/// Delete-one jackknife of a smooth function of pooled tallies.
pub fn jackknife<T: Tally, F: Fn(&T) -> f64>(reps: &[T], f: F) -> Estimate {
    let total: T = reps.iter().cloned().fold(T::default(), |a, b| a + b);
    let value = f(&total);
    let n = reps.len();
    if n < 2 {
        return Estimate {
            value,
            half_width: f64::NAN,
        };
    }
    let loo: Vec<f64> = reps
        .iter()
        .map(|r| f(&(total.clone() - r.clone())))
        .collect();
    let mean = loo.iter().sum::<f64>() / n as f64;
    let var = (n - 1) as f64 / n as f64 * loo.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    Estimate {
        value,
        half_width: 1.96 * var.sqrt(),
    }
}
