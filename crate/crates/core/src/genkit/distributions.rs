use super::{GenkitError, RandomStream, StreamError};

/// Maps one raw output to `[0, 1)` as `(v - min) / (max - min + 1)`.
pub fn uniform01<S: RandomStream + ?Sized>(stream: &mut S) -> Result<f64, StreamError> {
    let v = stream.next_raw()?;
    let offset = (v - stream.min_value()) as f64;
    Ok(offset / stream.range_len() as f64)
}

/// Unbiased integers in `[low, high]` by rejection sampling.
///
/// Raw offsets `r = v - min` are accepted when they fall below the largest
/// multiple of the interval length that fits the stream range, and then
/// reduced modulo the interval length. Intervals wider than the stream range
/// combine several raw draws as digits in base `range`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformInt {
    low: i64,
    high: i64,
}

impl UniformInt {
    pub fn new(low: i64, high: i64) -> Result<Self, GenkitError> {
        if low > high {
            return Err(GenkitError::Config(format!("empty integer interval [{low}, {high}]")));
        }
        Ok(Self { low, high })
    }

    pub fn low(&self) -> i64 {
        self.low
    }

    pub fn high(&self) -> i64 {
        self.high
    }

    fn span(&self) -> u128 {
        (self.high as i128 - self.low as i128 + 1) as u128
    }

    pub fn sample<S: RandomStream + ?Sized>(&self, stream: &mut S) -> Result<i64, StreamError> {
        let span = self.span();
        let range = stream.range_len();
        let min = stream.min_value();
        let offset = if span <= range {
            let limit = range / span * span;
            loop {
                let r = (stream.next_raw()? - min) as u128;
                if r < limit {
                    break r % span;
                }
            }
        } else {
            let mut total: u128 = 1;
            let mut digits = 0;
            while total < span {
                total *= range;
                digits += 1;
            }
            let limit = total / span * span;
            loop {
                let mut x: u128 = 0;
                for _ in 0..digits {
                    x = x * range + (stream.next_raw()? - min) as u128;
                }
                if x < limit {
                    break x % span;
                }
            }
        };
        Ok((self.low as i128 + offset as i128) as i64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genkit::{Lcg, SequenceStream};

    #[test]
    fn uniform01_endpoints() {
        let mut s = SequenceStream::new(vec![0, u32::MAX as u64], 0, u32::MAX as u64);
        assert_eq!(uniform01(&mut s).unwrap(), 0.0);
        let top = uniform01(&mut s).unwrap();
        assert_eq!(top, 1.0 - 1.0 / 4_294_967_296.0);
        assert!(top < 1.0);
    }

    #[test]
    fn uniform01_minstd_first_value() {
        let mut g = Lcg::minstd(1);
        let u = uniform01(&mut g).unwrap();
        assert!((u - 16806.0 / 2_147_483_646.0).abs() < 1e-18);
        assert!((u - 7.826e-6).abs() < 1e-9);
    }

    #[test]
    fn degenerate_interval() {
        let d = UniformInt::new(4, 4).unwrap();
        let mut s = SequenceStream::new(vec![3, 9, 1], 0, 15);
        for _ in 0..3 {
            assert_eq!(d.sample(&mut s).unwrap(), 4);
        }
        assert_eq!(d.sample(&mut s), Err(StreamError::Exhausted));
    }

    #[test]
    fn exact_range_is_identity_shift() {
        let d = UniformInt::new(1, 6).unwrap();
        let mut s = SequenceStream::new((10..16).collect(), 10, 15);
        let got: Vec<i64> = (0..6).map(|_| d.sample(&mut s).unwrap()).collect();
        assert_eq!(got, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn two_bit_source_rejects_top_value() {
        let d = UniformInt::new(0, 2).unwrap();
        let mut s = SequenceStream::new(vec![3, 0, 3, 1, 2], 0, 3);
        let got: Vec<i64> = (0..3).map(|_| d.sample(&mut s).unwrap()).collect();
        assert_eq!(got, vec![0, 1, 2]);
    }

    #[test]
    fn three_bit_source_is_exactly_balanced() {
        let d = UniformInt::new(0, 5).unwrap();
        let mut counts = [0u32; 6];
        for raw in 0..8u64 {
            let mut s = SequenceStream::new(vec![raw], 0, 7);
            if let Ok(v) = d.sample(&mut s) {
                counts[v as usize] += 1;
            }
        }
        assert_eq!(counts, [1; 6]);
    }

    #[test]
    fn wide_interval_combines_draws() {
        // range 4 per draw; span 10 needs two digits (16 values, limit 10)
        let d = UniformInt::new(0, 9).unwrap();
        let mut counts = [0u32; 10];
        for hi in 0..4u64 {
            for lo in 0..4u64 {
                let mut s = SequenceStream::new(vec![hi, lo], 0, 3);
                if let Ok(v) = d.sample(&mut s) {
                    counts[v as usize] += 1;
                }
            }
        }
        assert_eq!(counts, [1; 10]);
    }

    #[test]
    fn empty_interval_rejected() {
        assert!(UniformInt::new(3, 2).is_err());
    }
}
