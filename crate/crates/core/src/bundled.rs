//! Example programs shipped with the crate, each with an initial state.

use crate::cli::parse_init;
use crate::model::State;
use crate::syntax::{parse, Program};

#[derive(Clone, Copy, Debug)]
pub struct Example {
    pub name: &'static str,
    pub source: &'static str,
    pub init: &'static str,
}

impl Example {
    pub fn program(&self) -> Program {
        parse(self.source).expect("bundled programs parse")
    }

    /// The bundled initial state over the program's vocabulary.
    pub fn initial_state(&self, program: &Program) -> State {
        parse_init(self.init, &program.vocabulary).expect("bundled init files parse")
    }
}

macro_rules! example {
    ($name:literal) => {
        Example {
            name: $name,
            source: include_str!(concat!("../programs/", $name, ".hasm")),
            init: include_str!(concat!("../programs/", $name, ".init")),
        }
    };
}

pub const ALL: [Example; 6] = [
    example!("gpac"),
    example!("pendulum"),
    example!("bouncing_ball"),
    example!("counter"),
    example!("fibonacci"),
    example!("thermostat"),
];

pub fn example(name: &str) -> Option<Example> {
    ALL.iter().copied().find(|e| e.name == name)
}
