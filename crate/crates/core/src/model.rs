use std::fmt;
use std::str::FromStr;

/// Motility model of a particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    /// Active Brownian particle: constant speed, continuously diffusing heading.
    Abp,
    /// Run-and-tumble particle: straight runs broken by instantaneous reorientations.
    Rtp,
    /// Active Brownian particle with an extra constant angular velocity.
    ChiralAbp,
    /// Passive Brownian particle: no self-propulsion.
    Pbp,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Abp, Model::Rtp, Model::ChiralAbp, Model::Pbp];

    pub fn name(self) -> &'static str {
        match self {
            Model::Abp => "ABP",
            Model::Rtp => "RTP",
            Model::ChiralAbp => "CHIRAL_ABP",
            Model::Pbp => "PBP",
        }
    }

    pub fn is_self_propelled(self) -> bool {
        !matches!(self, Model::Pbp)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "ABP" => Ok(Model::Abp),
            "RTP" => Ok(Model::Rtp),
            "CHIRAL_ABP" | "CHIRAL" => Ok(Model::ChiralAbp),
            "PBP" => Ok(Model::Pbp),
            other => Err(format!(
                "unknown model `{other}` (expected ABP, RTP, CHIRAL_ABP or PBP)"
            )),
        }
    }
}

/// Axis about which a 3D chiral particle's heading precesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ChiralAxis {
    /// Fixed laboratory z axis.
    #[default]
    Lab,
    /// A body-fixed axis perpendicular to the heading, carried along by rotational diffusion.
    Body,
}

impl ChiralAxis {
    pub fn name(self) -> &'static str {
        match self {
            ChiralAxis::Lab => "lab",
            ChiralAxis::Body => "body",
        }
    }
}

impl FromStr for ChiralAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lab" => Ok(ChiralAxis::Lab),
            "body" => Ok(ChiralAxis::Body),
            other => Err(format!("unknown chiral axis `{other}` (expected lab or body)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert_eq!("chiral".parse::<Model>().unwrap(), Model::ChiralAbp);
        assert!("ABPP".parse::<Model>().is_err());
    }
}
