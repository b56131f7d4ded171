#include "fakejob/synthetic.hpp"

#include <array>
#include <string>
#include <string_view>

#include "fakejob/rng.hpp"

namespace fakejob::synthetic {

namespace {

using Pool = std::vector<std::string_view>;

// Title modifiers. Genuine titles put .first before .second; fraudulent
// titles swap them.
constexpr std::array<std::pair<std::string_view, std::string_view>, 3> kTitlePairs{{
    {"Senior", "Remote"},
    {"Lead", "Hybrid"},
    {"Junior", "Onsite"},
}};

const Pool kAreas{"Software", "Sales", "Marketing", "Data", "Customer Support", "Finance",
                  "Operations", "Product", "Web", "Account", "Backend", "Mobile"};

// Repeated entries weight the draw.
const Pool kRoles{"Manager",  "Manager",    "Manager",        "Manager",    "Manager",   "Developer",
                  "Developer", "Developer", "Developer",      "Engineer",   "Engineer",  "Engineer",
                  "Engineer",  "Analyst",   "Analyst",        "Designer",   "Specialist", "Assistant",
                  "Representative", "Consultant", "Coordinator"};

const Pool kCompanies{"Northwind", "Bluepeak", "Cobalt Labs", "Riverstone", "Aperture Digital", "Quanta",
                      "Helios Group", "Brightline", "Ironbridge", "Lumen Systems", "Meridian", "Oakridge"};

const Pool kProfile{
    "{c} builds cloud software for retail clients.",
    "Founded in 2009, {c} serves customers across Europe &amp; North America.",
    "{c} is a product company with offices in three countries.",
    "Our engineering team ships weekly releases.",
    "{c} values ownership, craft &amp; teamwork.",
    "We are a fast growing startup backed by leading investors.",
    "Our people work across product, design &amp; engineering.",
};

const Pool kDescription{
    "You will work closely with our product team.",
    "Collaborate with the team on daily planning.",
    "Own features from design to release, working with experienced peers.",
    "Work on customer facing projects with a supportive team.",
    "Mentor junior team members and share your experience.",
    "Help the team improve tooling, testing &amp; deployment.",
    "Work with stakeholders to define requirements.",
    "Drive team rituals, code reviews, planning.",
    "Build reliable services; monitor, measure, improve.",
    "Work cross functionally: sales, support, marketing.",
    "Bring fresh ideas; great work environment.",
    "Improve customer experience through data driven work.",
};

const Pool kRequirements{
    "3+ years experience in a similar role.",
    "Proven work experience with modern tools.",
    "Experience working in an agile team.",
    "Strong communication skills; team player.",
    "Bachelor degree or equivalent experience.",
    "Experience with SQL, Python or Java.",
    "Ability to work independently.",
    "Hands on experience with cloud platforms.",
};

const Pool kBenefits{
    "Competitive salary, pension &amp; health insurance.",
    "Flexible work hours.",
    "Learning budget for every team member.",
    "25 days paid holiday.",
    "Team offsites twice a year.",
};

// Vocabulary of the visible fraud rows.
const Pool kFraudDescription{
    "Earn weekly cash payments from home.",
    "Guaranteed income, no interview needed.",
    "Immediate start, apply now via email.",
    "Easy data entry tasks, earn extra money.",
    "Bonus paid daily; flexible work.",
    "Make money online with our simple system.",
    "Receive payment packages and forward them.",
    "Limited positions available, apply today.",
};

const Pool kFraudRequirements{
    "No experience required.",
    "Must have a computer and internet access.",
    "Must provide bank details for payroll setup.",
    "Basic typing skills.",
};

const Pool kLocations{"US, NY, New York", "US, CA, San Francisco", "GB, LND, London", "US, TX, Austin",
                      "DE, BE, Berlin", "NZ, , Auckland", "US, IL, Chicago", "GR, I, Athens", ""};
const Pool kEmployment{"Full-time", "Full-time", "Full-time", "Part-time", "Contract", ""};
const Pool kExperience{"Mid-Senior level", "Entry level", "Associate", "Not Applicable", ""};
const Pool kEducation{"Bachelor's Degree", "High School or equivalent", "Master's Degree", "Unspecified", ""};
const Pool kIndustry{"Information Technology and Services", "Computer Software", "Internet", "Marketing and Advertising",
                     "Financial Services", "Retail", ""};
const Pool kFunction{"Engineering", "Information Technology", "Sales", "Marketing", "Customer Service",
                     "Administrative", ""};
const Pool kSalary{"", "", "", "", "40000-60000", "55000-75000", "30000-45000"};

class Builder {
public:
    explicit Builder(std::uint64_t seed) : rng_(seed) {}

    bool chance(double p) { return rng_.uniform() < p; }
    std::string_view pick(const Pool& pool) { return pool[rng_.below(pool.size())]; }

    // k distinct sentences from the pool, in draw order.
    std::string sentences(const Pool& pool, std::size_t k, std::string_view company = {}) {
        std::vector<std::size_t> idx(pool.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        fisher_yates(std::span<std::size_t>(idx), rng_);
        std::string out;
        for (std::size_t i = 0; i < k && i < idx.size(); ++i) {
            std::string s(pool[idx[i]]);
            if (const auto at = s.find("{c}"); at != std::string::npos) s.replace(at, 3, company);
            if (!out.empty()) out += chance(0.3) ? "<br>" : " ";
            out += s;
        }
        return chance(0.5) ? "<p>" + out + "</p>" : out;
    }

    std::size_t between(std::size_t lo, std::size_t hi) { return lo + rng_.below(hi - lo + 1); }

private:
    SplitMix64 rng_;
};

enum class Kind { genuine, visible_fraud, order_only_fraud };

ingest::RawPosting make_row(Builder& b, std::int64_t id, Kind kind) {
    ingest::RawPosting p;
    p.job_id = id;
    p.fraudulent = kind == Kind::genuine ? 0 : 1;
    const bool visible = kind == Kind::visible_fraud;

    const auto& pair = kTitlePairs[static_cast<std::size_t>(b.between(0, kTitlePairs.size() - 1))];
    const auto first = kind == Kind::genuine ? pair.first : pair.second;
    const auto second = kind == Kind::genuine ? pair.second : pair.first;
    p.title = std::string(first) + " " + std::string(second) + " " + std::string(b.pick(kAreas)) + " " +
              std::string(b.pick(kRoles));

    p.location = std::string(b.pick(kLocations));
    p.department = b.chance(0.4) ? std::string(b.pick(kAreas)) : "";
    p.salary_range = std::string(b.pick(kSalary));

    const auto company = b.pick(kCompanies);
    if (!(visible ? b.chance(0.6) : b.chance(0.15))) p.company_profile = b.sentences(kProfile, b.between(1, 3), company);

    std::string description = b.sentences(kDescription, b.between(3, 6));
    std::string requirements = b.sentences(kRequirements, b.between(2, 4));
    if (visible) {
        description = b.sentences(kFraudDescription, b.between(2, 4)) + " " + description;
        if (b.chance(0.7)) requirements = b.sentences(kFraudRequirements, b.between(1, 2)) + " " + requirements;
    } else if (b.chance(0.03)) {
        // A little overlap keeps the fraud vocabulary from being a perfect separator.
        description += " " + b.sentences(kFraudDescription, 1);
    }
    p.description = description;
    p.requirements = b.chance(0.9) ? requirements : "";
    p.benefits = b.chance(0.7) ? b.sentences(kBenefits, b.between(1, 3)) : "";

    p.telecommuting = b.chance(visible ? 0.2 : 0.05) ? 1 : 0;
    p.has_company_logo = b.chance(visible ? 0.25 : 0.85) ? 1 : 0;
    p.has_questions = b.chance(visible ? 0.3 : 0.5) ? 1 : 0;
    p.employment_type = std::string(b.pick(kEmployment));
    p.required_experience = std::string(b.pick(kExperience));
    p.required_education = std::string(b.pick(kEducation));
    p.industry = std::string(b.pick(kIndustry));
    p.function = std::string(b.pick(kFunction));
    return p;
}

}  // namespace

std::vector<ingest::RawPosting> make_postings(const FixtureConfig& cfg) {
    Builder b(cfg.seed);
    const auto n_fraud = static_cast<std::size_t>(static_cast<double>(cfg.rows) * cfg.fraud_rate + 0.5);
    const auto n_order_only = static_cast<std::size_t>(static_cast<double>(n_fraud) * cfg.order_only_share + 0.5);

    std::vector<Kind> kinds(cfg.rows, Kind::genuine);
    for (std::size_t i = 0; i < n_fraud && i < cfg.rows; ++i) {
        kinds[i] = i < n_order_only ? Kind::order_only_fraud : Kind::visible_fraud;
    }
    SplitMix64 order_rng(cfg.seed ^ 0x5bd1e995ULL);
    fisher_yates(std::span<Kind>(kinds), order_rng);

    std::vector<ingest::RawPosting> rows;
    rows.reserve(cfg.rows);
    for (std::size_t i = 0; i < cfg.rows; ++i) rows.push_back(make_row(b, static_cast<std::int64_t>(i + 1), kinds[i]));
    return rows;
}

}  // namespace fakejob::synthetic
