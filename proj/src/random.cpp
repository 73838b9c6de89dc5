#include "mrpleio/random.hpp"

#include <boost/random/uniform_int_distribution.hpp>

namespace mrpleio {

Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * (keys.size() + 1));
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto k : keys) push(k);
    std::seed_seq seq(words.begin(), words.end());
    return Engine(seq);
}

std::vector<std::size_t> random_permutation(std::size_t n, Engine& engine) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    // boost's distribution is specified exactly, unlike std::shuffle.
    for (std::size_t i = n; i > 1; --i) {
        boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(perm[i - 1], perm[pick(engine)]);
    }
    return perm;
}

}  // namespace mrpleio
