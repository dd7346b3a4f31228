//! The discovery config parser must reject or normalize every input,
//! never panic; accepted configs satisfy the documented invariants.

#![no_main]

use libfuzzer_sys::fuzz_target;

use kabelian::DiscoveryConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = DiscoveryConfig::parse(s) {
        assert!(cfg.factor_length > 0 && cfg.factor_length % 2 == 0);
        assert!(cfg.family_max_length >= cfg.factor_length);
        assert_eq!(cfg.clique_size, 4);
        assert!(cfg.members.windows(2).all(|w| w[0] < w[1]), "members sorted and unique");
        assert!(cfg.members.iter().all(|m| m.alphabet() == cfg.target_alphabet));
    }
});
