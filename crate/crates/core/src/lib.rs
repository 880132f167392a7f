//! PBS-diagram calculus for coherent control of quantum channels.
//!
//! The crate provides:
//! * [`diagram`] — bare PBS-diagram terms with linear typing, a topology-only
//!   port-graph normal form, structural congruence, and contexts (diagrams
//!   with a single hole);
//! * [`pathsem`] — the word-path semantics: for every input polarisation and
//!   position, the gate word traversed and the output polarisation/position;
//! * [`synth`] — the constructive inverse: build a diagram realising an
//!   admissible word family, optionally negation-free;
//! * [`channels`] — purified channels `[U, |eps>, E]` and their first- and
//!   second-level functionals S1, T1, U2, S2, T2;
//! * [`qsem`] — the quantum semantics of extended diagrams: the global
//!   unitary and the induced CPTP map in Choi form;
//! * [`equiv`] — observational-equivalence deciders for PBS-free, neg-free
//!   and unrestricted contexts, with constructive distinguishing witnesses,
//!   plus iso-preorder witness checking and moment-based refutation;
//! * [`linalg`] — the dense complex kernel everything else rests on;
//! * [`sample`] — seeded random diagrams, contexts and channels for
//!   property-style testing.

pub mod channels;
pub mod diagram;
pub mod equiv;
pub mod linalg;
pub mod pathsem;
pub mod qsem;
pub mod sample;
pub mod synth;
