//! Dice and opposed checks.
//!
//! Every roll records whether it came from the generator or from a
//! facilitator override, so the number of generator draws in a turn can be
//! recomputed from the event log alone.

use serde::{Deserialize, Serialize};

use crate::rng::RngState;

/// What a roll is used for. Overrides may target one purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RollPurpose {
    Opposed,
    InternalStability,
    Election,
    Defection,
    ShockGate,
    Safety,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiceKind {
    D6,
    #[serde(rename = "2D6")]
    TwoD6,
}

/// Facilitator substitution for the next matching roll.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiceOverride {
    pub dice: DiceKind,
    pub value: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<RollPurpose>,
}

impl DiceOverride {
    pub fn is_valid(&self) -> bool {
        match self.dice {
            DiceKind::D6 => (1..=6).contains(&self.value),
            DiceKind::TwoD6 => (2..=12).contains(&self.value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DieRoll {
    pub value: u8,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub overridden: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoDiceRoll {
    pub dice: [u8; 2],
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub overridden: bool,
}

impl TwoDiceRoll {
    pub fn total(&self) -> u8 {
        self.dice[0] + self.dice[1]
    }

    pub fn draws(&self) -> u32 {
        if self.overridden {
            0
        } else {
            2
        }
    }
}

impl DieRoll {
    pub fn draws(&self) -> u32 {
        if self.overridden {
            0
        } else {
            1
        }
    }
}

/// Source of dice for the engine.
pub trait DiceSource {
    fn d6(&mut self, purpose: RollPurpose) -> DieRoll;
    fn two_d6(&mut self, purpose: RollPurpose) -> TwoDiceRoll;
}

/// `1 + (next_u64 mod 6)`; advances the generator by one draw.
pub fn roll_d6(rng: &mut RngState) -> u8 {
    1 + (rng.next_u64() % 6) as u8
}

/// Two sequential d6 draws summed.
pub fn roll_2d6(rng: &mut RngState) -> u8 {
    let a = roll_d6(rng);
    let b = roll_d6(rng);
    a + b
}

impl DiceSource for RngState {
    fn d6(&mut self, _purpose: RollPurpose) -> DieRoll {
        DieRoll {
            value: roll_d6(self),
            overridden: false,
        }
    }

    fn two_d6(&mut self, _purpose: RollPurpose) -> TwoDiceRoll {
        let a = roll_d6(self);
        let b = roll_d6(self);
        TwoDiceRoll {
            dice: [a, b],
            overridden: false,
        }
    }
}

/// Result of `2d6 + attr` against `2d6 + attr`; ties go to the defender.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub attacker_roll: TwoDiceRoll,
    pub defender_roll: TwoDiceRoll,
    pub attacker_attr: i32,
    pub defender_attr: i32,
    pub attacker_total: i32,
    pub defender_total: i32,
    pub success: bool,
    pub margin: i32,
}

impl CheckOutcome {
    pub fn draws(&self) -> u32 {
        self.attacker_roll.draws() + self.defender_roll.draws()
    }
}

/// The attacker rolls first.
pub fn opposed_check(
    attacker_attr: i32,
    defender_attr: i32,
    dice: &mut impl DiceSource,
) -> CheckOutcome {
    opposed_check_for(attacker_attr, defender_attr, RollPurpose::Opposed, dice)
}

pub(crate) fn opposed_check_for(
    attacker_attr: i32,
    defender_attr: i32,
    purpose: RollPurpose,
    dice: &mut impl DiceSource,
) -> CheckOutcome {
    let attacker_roll = dice.two_d6(purpose);
    let defender_roll = dice.two_d6(purpose);
    let attacker_total = attacker_roll.total() as i32 + attacker_attr;
    let defender_total = defender_roll.total() as i32 + defender_attr;
    let margin = attacker_total - defender_total;
    CheckOutcome {
        attacker_roll,
        defender_roll,
        attacker_attr,
        defender_attr,
        attacker_total,
        defender_total,
        success: margin > 0,
        margin,
    }
}

/// Dice for one turn of resolution: pulls from the game generator unless a
/// queued override matches, and counts generator draws.
pub struct TurnDice<'a> {
    rng: &'a mut RngState,
    overrides: Vec<DiceOverride>,
    draws: u32,
}

impl<'a> TurnDice<'a> {
    pub fn new(rng: &'a mut RngState, overrides: Vec<DiceOverride>) -> Self {
        Self {
            rng,
            overrides,
            draws: 0,
        }
    }

    pub fn draws(&self) -> u32 {
        self.draws
    }

    pub fn rng(&self) -> &RngState {
        self.rng
    }

    /// Overrides that never matched a roll.
    pub fn into_unused(self) -> Vec<DiceOverride> {
        self.overrides
    }

    fn take_override(&mut self, kind: DiceKind, purpose: RollPurpose) -> Option<u8> {
        let pos = self
            .overrides
            .iter()
            .position(|o| o.dice == kind && o.purpose.map_or(true, |p| p == purpose))?;
        Some(self.overrides.remove(pos).value)
    }
}

impl DiceSource for TurnDice<'_> {
    fn d6(&mut self, purpose: RollPurpose) -> DieRoll {
        if let Some(value) = self.take_override(DiceKind::D6, purpose) {
            return DieRoll {
                value,
                overridden: true,
            };
        }
        self.draws += 1;
        DieRoll {
            value: roll_d6(self.rng),
            overridden: false,
        }
    }

    fn two_d6(&mut self, purpose: RollPurpose) -> TwoDiceRoll {
        if let Some(value) = self.take_override(DiceKind::TwoD6, purpose) {
            let hi = value.div_ceil(2);
            return TwoDiceRoll {
                dice: [hi, value - hi],
                overridden: true,
            };
        }
        self.draws += 2;
        let a = roll_d6(self.rng);
        let b = roll_d6(self.rng);
        TwoDiceRoll {
            dice: [a, b],
            overridden: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d6_stays_in_range() {
        let mut rng = RngState::from_seed(9);
        for _ in 0..10_000 {
            let v = roll_d6(&mut rng);
            assert!((1..=6).contains(&v));
        }
    }

    #[test]
    fn two_d6_advances_exactly_two_draws() {
        let mut a = RngState::from_seed(5);
        let mut b = a.clone();
        roll_2d6(&mut a);
        b.next_u64();
        b.next_u64();
        assert_eq!(a, b);
    }

    #[test]
    fn overridden_two_d6_splits_value_and_skips_generator() {
        let mut rng = RngState::from_seed(3);
        let before = rng.clone();
        let mut dice = TurnDice::new(
            &mut rng,
            vec![DiceOverride {
                dice: DiceKind::TwoD6,
                value: 11,
                purpose: Some(RollPurpose::Safety),
            }],
        );
        // A roll for another purpose does not consume the override.
        let other = dice.two_d6(RollPurpose::Election);
        assert!(!other.overridden);
        let safety = dice.two_d6(RollPurpose::Safety);
        assert_eq!(safety.dice, [6, 5]);
        assert!(safety.overridden);
        assert_eq!(dice.draws(), 2);
        let mut replay = before;
        replay.next_u64();
        replay.next_u64();
        assert_eq!(&replay, dice.rng());
    }

    #[test]
    fn ties_go_to_defender() {
        let mut rng = RngState::from_seed(1);
        let mut dice = TurnDice::new(
            &mut rng,
            vec![
                DiceOverride { dice: DiceKind::TwoD6, value: 7, purpose: None },
                DiceOverride { dice: DiceKind::TwoD6, value: 7, purpose: None },
            ],
        );
        let out = opposed_check(3, 3, &mut dice);
        assert_eq!(out.margin, 0);
        assert!(!out.success);
    }
}
