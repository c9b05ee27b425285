use nalgebra::ComplexField;

pub type C64 = nalgebra::Complex<f64>;

/// Scalar field of a function system or vector family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    /// The smallest field containing both.
    pub fn join(self, other: Field) -> Field {
        if self == Field::Complex || other == Field::Complex {
            Field::Complex
        } else {
            Field::Real
        }
    }
}

/// The two scalar types the numerics run over.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    const FIELD: Field;
    fn from_c64(z: C64) -> Self;
    fn to_c64(self) -> C64;
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;
    fn from_c64(z: C64) -> Self {
        z.re
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Scalar for C64 {
    const FIELD: Field = Field::Complex;
    fn from_c64(z: C64) -> Self {
        z
    }
    fn to_c64(self) -> C64 {
        self
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of complex terms, real and imaginary parts separately.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSumC {
    re: KahanSum,
    im: KahanSum,
}

impl KahanSumC {
    pub fn add(&mut self, z: C64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re.value(), self.im.value())
    }
}

pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = KahanSum::default();
    for x in it {
        s.add(x);
    }
    s.value()
}
