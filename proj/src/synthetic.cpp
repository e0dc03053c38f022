#include "treeids/synthetic.hpp"

#include <cstdio>
#include <ostream>

#include "treeids/rng.hpp"

namespace treeids {
namespace {

constexpr std::uint16_t kGearId = 0x43F;
constexpr std::uint16_t kRpmId = 0x316;
constexpr std::uint16_t kDosId = 0x000;

struct IdProfile {
    std::uint16_t id;
    std::uint8_t dlc;
    std::array<std::uint8_t, 8> base;
    std::array<std::uint8_t, 8> spread; // byte b varies in [base, base + spread]
    int counter_byte;                   // -1 = none
};

const std::vector<IdProfile>& normal_ids() {
    static const std::vector<IdProfile> ids = {
        {0x018, 8, {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}, {0, 0, 0, 0, 0, 0, 0, 0}, 7},
        {0x034, 8, {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}, {0, 0, 0, 0, 0, 0, 0, 0}, -1},
        {0x043, 8, {0x00, 0x08, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}, {0, 0, 0, 0, 0, 0, 0, 0}, -1},
        {0x080, 8, {0x00, 0x17, 0xE0, 0x09, 0x1F, 0x22, 0x00, 0x00}, {0, 4, 8, 0, 6, 3, 0, 0}, 6},
        {0x153, 8, {0x00, 0x21, 0x10, 0xFF, 0x00, 0xFF, 0x00, 0x00}, {0, 0, 0, 0, 0, 0, 15, 0}, 7},
        {0x164, 8, {0x00, 0x08, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}, {0, 0, 0, 0, 0, 0, 0, 0}, 4},
        {0x18F, 8, {0xFE, 0x3B, 0x00, 0x00, 0x00, 0x3B, 0x00, 0x00}, {0, 2, 0, 0, 0, 2, 0, 0}, -1},
        {0x1F1, 8, {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}, {0, 0, 0, 0, 0, 0, 0, 0}, -1},
        {0x220, 8, {0x0A, 0x00, 0x80, 0x00, 0x00, 0x00, 0x80, 0x00}, {8, 0, 8, 0, 0, 0, 4, 0}, 7},
        {0x260, 8, {0x05, 0x20, 0x24, 0x68, 0x77, 0x00, 0x00, 0x30}, {3, 0, 2, 0, 0, 0, 0, 0}, 6},
        {0x2A0, 8, {0x60, 0x00, 0x83, 0x1D, 0x96, 0x02, 0xBD, 0x00}, {0, 0, 0, 0, 0, 0, 0, 0}, 7},
        {0x2C0, 8, {0x15, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}, {6, 0, 0, 0, 0, 0, 0, 0}, -1},
        {kRpmId, 8, {0x05, 0x21, 0x68, 0x09, 0x21, 0x21, 0x00, 0x6F}, {0, 0, 12, 4, 0, 0, 0, 0}, -1},
        {0x329, 8, {0x40, 0xBB, 0x7F, 0x14, 0x11, 0x20, 0x00, 0x14}, {0, 6, 0, 0, 0, 0, 0, 0}, 6},
        {0x350, 8, {0x05, 0x28, 0xA4, 0x66, 0x6D, 0x00, 0x00, 0xA2}, {0, 0, 0, 0, 0, 0, 0, 0}, -1},
        {0x370, 8, {0x00, 0x20, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}, {0, 0, 0, 0, 0, 0, 0, 0}, 7},
        {0x430, 8, {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}, {0, 0, 0, 0, 0, 0, 0, 0}, -1},
        {kGearId, 8, {0x10, 0x40, 0x60, 0xFF, 0x74, 0x48, 0x08, 0x00}, {0, 0, 0, 0, 5, 0, 0, 0}, -1},
        {0x4B1, 8, {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}, {0, 0, 0, 0, 0, 0, 0, 0}, -1},
        {0x4F0, 8, {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}, {0, 0, 0, 0, 0, 0, 0, 0}, 7},
        {0x545, 8, {0xD8, 0x00, 0x00, 0x8A, 0x00, 0x00, 0x00, 0x00}, {0, 0, 0, 4, 0, 0, 0, 0}, -1},
        {0x5F0, 2, {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}, {0, 0, 0, 0, 0, 0, 0, 0}, -1},
        {0x690, 8, {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}, {0, 0, 0, 0, 0, 0, 0, 0}, 7},
    };
    return ids;
}

CanFrame normal_frame(Rng& rng, std::size_t ordinal) {
    const auto& ids = normal_ids();
    const auto& p = ids[rng.index(ids.size())];
    CanFrame f;
    f.can_id = p.id;
    f.dlc = p.dlc;
    for (std::size_t b = 0; b < p.dlc; ++b) {
        f.data[b] = static_cast<std::uint8_t>(p.base[b] + (p.spread[b] ? rng.index(p.spread[b] + 1u) : 0));
    }
    if (p.counter_byte >= 0 && p.counter_byte < p.dlc)
        f.data[static_cast<std::size_t>(p.counter_byte)] = static_cast<std::uint8_t>((ordinal & 0x0F) << 4);
    return f;
}

CanFrame attack_frame(Rng& rng, int type) {
    CanFrame f;
    f.dlc = 8;
    switch (type) {
    case 1: // flood of the highest-priority id
        f.can_id = kDosId;
        break;
    case 2: // random id and payload
        f.can_id = static_cast<std::uint16_t>(rng.index(0x800));
        for (auto& b : f.data) b = static_cast<std::uint8_t>(rng.index(256));
        break;
    case 3: // forged gear position
        f.can_id = kGearId;
        f.data = {0x01, 0x45, 0x60, 0xFF, 0x6B, 0x00, 0x00, 0x00};
        f.data[4] = static_cast<std::uint8_t>(0x6B + rng.index(3));
        break;
    default: // forged RPM
        f.can_id = kRpmId;
        f.data = {0x45, 0x29, 0x24, 0xFF, 0x29, 0x24, 0x00, 0xFF};
        f.data[2] = static_cast<std::uint8_t>(0x20 + rng.index(8));
        break;
    }
    return f;
}

} // namespace

std::vector<CanFrame> generate_can_frames(const SyntheticCanOptions& options) {
    Rng rng(derive_seed(options.seed, "synthetic-can"));
    std::vector<CanFrame> frames;
    frames.reserve(options.frames);
    double t = 1478198376.0;
    for (std::size_t i = 0; i < options.frames; ++i) {
        t += 0.0002 + 0.0003 * rng.uniform();
        CanFrame f;
        int type = 0;
        if (rng.uniform() < options.attack_share) type = 1 + static_cast<int>(rng.index(4));
        f = type == 0 ? normal_frame(rng, i) : attack_frame(rng, type);
        f.timestamp = t;
        f.label = kSyntheticLabels[type];
        frames.push_back(f);
    }
    return frames;
}

void write_can_csv(const std::vector<CanFrame>& frames, std::ostream& out, const std::string& normal_label) {
    char buf[32];
    for (const auto& f : frames) {
        std::snprintf(buf, sizeof buf, "%.6f,%04x,%u", f.timestamp, f.can_id, static_cast<unsigned>(f.dlc));
        out << buf;
        for (std::size_t b = 0; b < f.dlc; ++b) {
            std::snprintf(buf, sizeof buf, ",%02x", f.data[b]);
            out << buf;
        }
        out << (f.label == normal_label ? ",R\n" : ",T\n");
    }
}

} // namespace treeids
