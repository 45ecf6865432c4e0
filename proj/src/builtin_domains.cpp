#include <algorithm>
#include <set>
#include <stdexcept>

#include "trajmark/domain.hpp"
#include "trajmark/error.hpp"
#include "trajmark/rng.hpp"

namespace trajmark {

namespace {

struct Param {
  std::string name;   // canonical name; doubles as slot and value-pool name
  std::string alias;  // spelling used by alternative vendors
};

struct Vocab {
  std::vector<std::string> vendors;
  std::vector<std::string> services;
  std::vector<std::string> verbs;
  std::vector<std::string> nouns;
  std::vector<std::string> modes;
  std::vector<std::string> resources;
  std::vector<Param> params;
  std::map<std::string, std::vector<std::string>> words;  // pool name -> stems
  std::vector<std::string> int_pools;
};

Vocab data_vocab() {
  Vocab v;
  v.vendors = {"Snowflake", "BigQuery", "Redshift", "Databricks", "Postgres", "DuckDb", "Clickhouse", "Athena"};
  v.services = {"Warehouse", "Lake", "Sheets", "Stats", "Viz", "Etl", "Catalog", "Notebook"};
  v.verbs = {"Export", "Load", "Profile", "Sample", "Join", "Pivot", "Dedupe", "Validate", "Forecast", "Cluster",
             "Archive", "Index", "Snapshot", "Merge", "Filter", "Rank"};
  v.nouns = {"Table", "Column", "Dataset", "Schema", "Partition", "Chart", "Report", "Query", "Metric", "Segment",
             "Cohort", "Pipeline"};
  v.modes = {"mean", "median", "sum", "max", "min", "count", "stddev", "p95"};
  v.resources = {"Report", "Extract", "Snapshot", "Notebook", "Dashboard", "Model"};
  v.params = {{"table", "table_name"}, {"column", "field"}, {"dataset", "source"}, {"target", "destination"},
              {"window", "days"}, {"metric", "measure"}};
  v.words = {{"table", {"orders", "customers", "invoices", "sessions", "events", "products", "refunds", "campaigns"}},
             {"column", {"revenue", "region", "sku", "latency", "price", "status", "channel", "created_at"}},
             {"dataset", {"sales", "telemetry", "inventory", "marketing", "finance", "support", "hr", "web"}},
             {"target", {"s3_bucket", "gcs_bucket", "share_drive", "archive", "staging", "reports", "scratch", "lake"}},
             {"metric", {"churn", "ltv", "dau", "conversion", "aov", "retention", "nps", "ctr"}}};
  v.int_pools = {"window"};
  return v;
}

Vocab business_vocab() {
  Vocab v;
  v.vendors = {"Salesforce", "Hubspot", "Zoho", "Pipedrive", "Quickbooks", "Xero", "Netsuite", "Sage"};
  v.services = {"Crm", "Ledger", "Payroll", "Calendar", "Mail", "Invoice", "Procurement", "Helpdesk"};
  v.verbs = {"Create", "Approve", "Schedule", "Assign", "Close", "Reconcile", "Escalate", "Renew", "Submit", "Tag",
             "Forward", "Audit", "Quote", "Book", "Cancel", "Notify"};
  v.nouns = {"Invoice", "Lead", "Contract", "Meeting", "Ticket", "Order", "Expense", "Budget", "Vendor", "Deal",
             "Shipment", "Timesheet"};
  v.modes = {"net30", "net60", "prepaid", "monthly", "quarterly", "annual", "urgent", "standard"};
  v.resources = {"Record", "Memo", "Draft", "Quote", "Statement", "Agreement"};
  v.params = {{"account", "account_id"}, {"contact", "recipient"}, {"amount", "total"}, {"target", "assignee"},
              {"days", "due_in"}, {"note", "comment"}};
  v.words = {{"account", {"acme", "globex", "initech", "umbrella", "hooli", "stark", "wayne", "wonka"}},
             {"contact", {"alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi"}},
             {"amount", {"120.00", "99.50", "4500.00", "15.75", "800.00", "2300.10", "60.00", "1000.00"}},
             {"target", {"finance_team", "sales_ops", "legal", "procurement", "support", "ceo_office", "audit", "it"}},
             {"note", {"urgent", "follow_up", "renewal", "q3_close", "escalated", "approved", "draft", "pending"}}};
  v.int_pools = {"days"};
  return v;
}

Vocab social_vocab() {
  Vocab v;
  v.vendors = {"Twitter", "Mastodon", "Bluesky", "Threads", "Facebook", "Reddit", "Discord", "Linkedin"};
  v.services = {"Feed", "Inbox", "Media", "Profile", "Group", "Event", "Moderation", "Analytics"};
  v.verbs = {"Post", "Share", "Like", "Follow", "Mute", "Pin", "Boost", "Reply", "Report", "Invite", "Schedule",
             "Translate", "Tag", "Archive", "Embed", "Quote"};
  v.nouns = {"Status", "Photo", "Video", "Story", "Poll", "Thread", "Comment", "Message", "Event", "Album", "Link",
             "Draft"};
  v.modes = {"public", "friends", "private", "unlisted", "followers", "close_friends", "team", "everyone"};
  v.resources = {"Draft", "Album", "Playlist", "Collection", "Bookmark", "Reel"};
  v.params = {{"handle", "username"}, {"text", "body"}, {"media", "attachment"}, {"target", "recipient"},
              {"hours", "delay"}, {"topic", "hashtag"}};
  v.words = {{"handle", {"@ada", "@linus", "@grace", "@alan", "@barbara", "@ken", "@margaret", "@dennis"}},
             {"text", {"hello_world", "big_news", "launch_day", "thank_you", "weekly_recap", "behind_scenes",
                       "poll_results", "save_date"}},
             {"media", {"img_001.png", "clip_22.mp4", "banner.jpg", "chart.png", "promo.mov", "logo.svg",
                        "team.jpg", "demo.gif"}},
             {"target", {"@news_desk", "@support", "@press", "@friends", "@community", "@mods", "@partners",
                         "@fans"}},
             {"topic", {"#ai", "#music", "#sports", "#travel", "#food", "#tech", "#art", "#books"}}};
  v.int_pools = {"hours"};
  return v;
}

Effect rd(std::string key, std::string into) { return Effect{Effect::Op::Read, std::move(key), {}, std::move(into), {}, {}}; }
Effect wr(std::string key, std::string value) { return Effect{Effect::Op::Write, std::move(key), std::move(value), {}, {}, {}}; }
Effect er(std::string key) { return Effect{Effect::Op::Erase, std::move(key), {}, {}, {}, {}}; }
Effect lg(std::string text) { return Effect{Effect::Op::Log, {}, std::move(text), {}, {}, {}}; }
Effect dv(std::string fn, std::vector<std::string> inputs, std::string into) {
  return Effect{Effect::Op::Derive, {}, {}, std::move(into), std::move(fn), std::move(inputs)};
}

std::string braced(const std::string& p) { return "{" + p + "}"; }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

PatternArg slot_arg(std::string name, std::string slot) { return PatternArg{std::move(name), std::move(slot)}; }
PatternArg fixed_arg(std::string name, Value v) { return PatternArg{std::move(name), std::move(v)}; }

class Builder {
 public:
  Builder(std::string name, Vocab vocab) : vocab_(std::move(vocab)), rng_(hash_text("builtin-domain:" + name)) {
    d_.name = name;
    d_.manifest.domain = name;
    for (const auto& [pool, stems] : vocab_.words) {
      std::vector<Value> values;
      for (const char* suffix : {"", "_2024", "_eu", "_archive"})
        for (const auto& s : stems) values.emplace_back(s + suffix);
      d_.value_pools.emplace(pool, std::move(values));
    }
    for (const auto& pool : vocab_.int_pools) {
      std::vector<Value> values;
      for (std::int64_t k : {1, 2, 3, 5, 7, 14, 21, 30, 45, 60, 90, 180}) values.emplace_back(k);
      d_.value_pools.emplace(pool, std::move(values));
    }
  }

  DomainSpec finish() {
    check_domain(d_);
    return std::move(d_);
  }

  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(uniform_int(rng_, 0, n - 1)); }

  std::string next_op() {
    for (;;) {
      auto op = vocab_.verbs[pick(vocab_.verbs.size())] + vocab_.nouns[pick(vocab_.nouns.size())];
      if (used_ops_.insert(op).second) return op;
    }
  }

  const std::string& service() { return vocab_.services[pick(vocab_.services.size())]; }

  std::vector<Param> params(std::size_t n) {
    std::vector<Param> all = vocab_.params;
    for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[pick(i)]);
    all.resize(n);
    return all;
  }

  void add_tool(ToolSpec t) {
    if (!used_tools_.insert(t.name).second) throw std::logic_error("builtin domain reuses tool " + t.name);
    d_.tools.add(std::move(t));
  }
  bool tool_taken(const std::string& name) const { return used_tools_.count(name) != 0; }

  // Hash-returning operation that records its result under the first argument.
  ToolSpec core_tool(const std::string& name, const std::string& opkey, const std::vector<std::string>& arg_names) {
    ToolSpec t{name, arg_names, {}, "{h}", false};
    std::vector<std::string> inputs{opkey};
    std::string entry = opkey;
    for (const auto& a : arg_names) {
      inputs.push_back(braced(a));
      entry += " " + braced(a);
    }
    t.effects = {dv("hash", inputs, "h"), wr(opkey + ":" + braced(arg_names.front()), "{h}"), lg(entry)};
    return t;
  }

  void add_set(EquivalenceSet set, const Distribution& natural) {
    fill_mappings(set);
    d_.natural.emplace(set.id, natural);
    valid_ids_.push_back(set.id);
    d_.manifest.candidates.push_back(std::move(set));
  }

  void add_decoy(EquivalenceSet set) {
    fill_mappings(set);
    d_.manifest.candidates.push_back(std::move(set));
  }

  Distribution natural(std::size_t arity) {
    static const std::vector<std::vector<double>> two = {{0.5, 0.5}, {0.6, 0.4}, {0.7, 0.3}, {0.8, 0.2},
                                                         {0.85, 0.15}, {0.4, 0.6}, {0.3, 0.7}};
    static const std::vector<std::vector<double>> three = {{0.5, 0.3, 0.2}, {0.4, 0.35, 0.25}, {0.2, 0.5, 0.3}};
    return Distribution(arity == 2 ? two[pick(two.size())] : three[pick(three.size())]);
  }

  std::string set_id(Scheme s, std::size_t k) {
    return d_.name + "." + lower(std::string(to_string(s))) + "." + (k < 9 ? "0" : "") + std::to_string(k + 1);
  }

  void build_vr(std::size_t n) {
    const auto& vendors = vocab_.vendors;
    for (std::size_t k = 0; k < n; ++k) {
      const auto op = next_op();
      const auto opkey = lower(op);
      const auto ps = params(1 + pick(3));
      std::vector<std::size_t> vs{k % vendors.size()};
      vs.push_back((k + 1 + k / vendors.size()) % vendors.size());
      if (k % 4 == 3) vs.push_back((vs[1] + 2) % vendors.size());
      EquivalenceSet set{set_id(Scheme::VR, k), Scheme::VR, {}, {}};
      for (std::size_t m = 0; m < vs.size(); ++m) {
        std::vector<std::string> names;
        ActionPattern pat{vendors[vs[m]] + "." + op, {}};
        for (const auto& p : ps) {
          const auto& arg = m == 0 ? p.name : p.alias;
          names.push_back(arg);
          pat.args.push_back(slot_arg(arg, p.name));
        }
        add_tool(core_tool(pat.tool, opkey, names));
        set.members.push_back(Segment{{std::move(pat)}});
      }
      add_set(std::move(set), natural(vs.size()));
    }
  }

  void build_ia(std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto base = service() + "." + next_op();
      const auto opkey = lower(base);
      const auto ps = params(1 + pick(2));
      std::vector<std::string> names;
      for (const auto& p : ps) names.push_back(p.name);
      const std::size_t arity = k % 5 == 4 ? 3 : 2;
      EquivalenceSet set{set_id(Scheme::IA, k), Scheme::IA, {}, {}};
      for (std::size_t m = 0; m < arity; ++m) {
        ActionPattern pat{base + "_V" + std::to_string(m + 1), {}};
        for (const auto& p : ps) pat.args.push_back(slot_arg(p.name, p.name));
        add_tool(core_tool(pat.tool, opkey, names));
        set.members.push_back(Segment{{std::move(pat)}});
      }
      add_set(std::move(set), natural(arity));
    }
  }

  // Pairs of sets share one generic tool, each pinning a different mode.
  void build_pgr(std::size_t n) {
    std::string generic, arg, opkey;
    std::vector<std::size_t> modes;
    for (std::size_t k = 0; k < n; ++k) {
      if (k % 2 == 0) {
        const auto svc = service();
        const auto verb = vocab_.verbs[pick(vocab_.verbs.size())];
        generic = svc + "." + verb;
        for (int tries = 0; tool_taken(generic) && tries < 100; ++tries)
          generic = svc + "." + verb + vocab_.nouns[pick(vocab_.nouns.size())];
        opkey = lower(generic);
        arg = params(1).front().name;
        add_tool(ToolSpec{generic,
                          {arg, "mode"},
                          {dv("hash", {opkey, braced(arg), "{mode}"}, "h"), wr(opkey + ":" + braced(arg), "{mode}:{h}"),
                           lg(opkey + " {mode} " + braced(arg))},
                          "{h}",
                          false});
        modes.clear();
        while (modes.size() < 2) {
          auto m = pick(vocab_.modes.size());
          if (std::find(modes.begin(), modes.end(), m) == modes.end()) modes.push_back(m);
        }
      }
      const auto& mode = vocab_.modes[modes[k % 2]];
      std::string camel = mode;
      camel.erase(std::remove(camel.begin(), camel.end(), '_'), camel.end());
      camel[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(camel[0])));
      const auto specific = generic + camel;
      add_tool(ToolSpec{specific,
                        {arg},
                        {dv("hash", {opkey, braced(arg), mode}, "h"), wr(opkey + ":" + braced(arg), mode + ":{h}"),
                         lg(opkey + " " + mode + " " + braced(arg))},
                        "{h}",
                        false});
      EquivalenceSet set{set_id(Scheme::PGR, k), Scheme::PGR, {}, {}};
      set.members.push_back(Segment{{ActionPattern{generic, {slot_arg(arg, arg), fixed_arg("mode", mode)}}}});
      set.members.push_back(Segment{{ActionPattern{specific, {slot_arg(arg, arg)}}}});
      add_set(std::move(set), natural(2));
    }
  }

  void build_ae(std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto svc = service();
      const auto verb = vocab_.verbs[pick(vocab_.verbs.size())];
      auto noun = vocab_.nouns[pick(vocab_.nouns.size())];
      std::string op = verb + noun;
      while (!used_ops_.insert(op).second) {
        noun = vocab_.nouns[pick(vocab_.nouns.size())];
        op = vocab_.verbs[pick(vocab_.verbs.size())] + noun;
      }
      const auto base = svc + "." + op;
      const auto opkey = lower(base);
      const auto ps = params(2);
      const std::vector<std::string> names{ps[0].name, ps[1].name};
      add_tool(core_tool(base, opkey, names));
      const ActionPattern base_pat{base, {slot_arg(names[0], names[0]), slot_arg(names[1], names[1])}};
      auto helper = [&](const std::string& name) {
        add_tool(ToolSpec{name,
                          {names[0]},
                          {rd(opkey + ":" + braced(names[0]), "v"), lg("audit " + opkey + " " + braced(names[0]))},
                          "{v}",
                          true});
        return ActionPattern{name, {slot_arg(names[0], names[0])}};
      };
      EquivalenceSet set{set_id(Scheme::AE, k), Scheme::AE, {}, {}};
      set.members.push_back(Segment{{base_pat}});
      set.members.push_back(Segment{{base_pat, helper(svc + ".Get" + op + "Status")}});
      if (k % 3 == 2) set.members.push_back(Segment{{base_pat, helper(svc + ".List" + op + "History")}});
      const auto arity = set.arity();
      add_set(std::move(set), natural(arity));
    }
  }

  void build_ce(std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto svc = service();
      auto res = vocab_.resources[k % vocab_.resources.size()];
      if (k >= vocab_.resources.size()) res += std::to_string(k / vocab_.resources.size() + 1);
      const auto key = lower(svc + res);
      EquivalenceSet set{set_id(Scheme::CE, k), Scheme::CE, {}, {}};
      switch (k % 3) {
        case 0: {
          const auto mv = svc + ".Move" + res, cp = svc + ".Copy" + res, rm = svc + ".Delete" + res;
          add_tool(ToolSpec{mv, {"src", "dst"},
                            {rd(key + ":{src}", "c"), wr(key + ":{dst}", "{c}"), er(key + ":{src}")}, "ok", false});
          add_tool(ToolSpec{cp, {"src", "dst"}, {rd(key + ":{src}", "c"), wr(key + ":{dst}", "{c}")}, "copied {dst}", false});
          add_tool(ToolSpec{rm, {"path"}, {er(key + ":{path}")}, "ok", false});
          set.members.push_back(Segment{{ActionPattern{mv, {slot_arg("src", "src"), slot_arg("dst", "dst")}}}});
          set.members.push_back(Segment{{ActionPattern{cp, {slot_arg("src", "src"), slot_arg("dst", "dst")}},
                                         ActionPattern{rm, {slot_arg("path", "src")}}}});
          break;
        }
        case 1: {
          const auto up = svc + ".Upsert" + res, rm = svc + ".Remove" + res, in = svc + ".Insert" + res;
          add_tool(ToolSpec{up, {"key", "value"}, {wr(key + ":{key}", "{value}")}, "stored {key}", false});
          add_tool(ToolSpec{rm, {"key"}, {er(key + ":{key}")}, "removed {key}", false});
          add_tool(ToolSpec{in, {"key", "value"}, {wr(key + ":{key}", "{value}")}, "stored {key}", false});
          set.members.push_back(Segment{{ActionPattern{up, {slot_arg("key", "key"), slot_arg("value", "value")}}}});
          set.members.push_back(Segment{{ActionPattern{rm, {slot_arg("key", "key")}},
                                         ActionPattern{in, {slot_arg("key", "key"), slot_arg("value", "value")}}}});
          break;
        }
        default: {
          const auto rp = svc + ".Replace" + res, cl = svc + ".Clear" + res, ap = svc + ".Append" + res;
          add_tool(ToolSpec{rp, {"doc", "text"}, {wr(key + ":{doc}", "{text}")}, "updated {doc}", false});
          add_tool(ToolSpec{cl, {"doc"}, {wr(key + ":{doc}", "")}, "cleared {doc}", false});
          add_tool(ToolSpec{ap, {"doc", "text"}, {rd(key + ":{doc}", "c"), wr(key + ":{doc}", "{c}{text}")},
                            "updated {doc}", false});
          set.members.push_back(Segment{{ActionPattern{rp, {slot_arg("doc", "doc"), slot_arg("text", "text")}}}});
          set.members.push_back(Segment{{ActionPattern{cl, {slot_arg("doc", "doc")}},
                                         ActionPattern{ap, {slot_arg("doc", "doc"), slot_arg("text", "text")}}}});
          break;
        }
      }
      add_set(std::move(set), natural(2));
    }
  }

  // Candidates that look plausible but change behaviour; validation must reject them.
  void build_decoys() {
    const auto svc = service();
    const auto key = lower(svc) + "file";
    add_tool(ToolSpec{svc + ".PurgeFile", {"path"}, {er(key + ":{path}")}, "ok", false});
    add_tool(ToolSpec{svc + ".DuplicateFile", {"src", "dst"}, {rd(key + ":{src}", "c"), wr(key + ":{dst}", "{c}")},
                      "ok", false});
    EquivalenceSet purge{d_.name + ".decoy.purge", Scheme::CE, {}, {}};
    purge.members.push_back(Segment{{ActionPattern{svc + ".PurgeFile", {slot_arg("path", "path")}}}});
    purge.members.push_back(Segment{{ActionPattern{svc + ".DuplicateFile", {slot_arg("src", "src"), slot_arg("dst", "dst")}}}});
    purge.mappings[{0, 1}] = ParamMapping{{{{"src", SlotRef{0, "path"}}, {"dst", SlotRef{0, "path"}}}}};
    purge.mappings[{1, 0}] = ParamMapping{{{{"path", SlotRef{0, "src"}}}}};
    add_decoy(std::move(purge));

    const auto op = next_op();
    const auto opkey = lower(op);
    const auto& a = vocab_.vendors[0];
    const auto& b = vocab_.vendors[1];
    const auto p = params(1).front().name;
    add_tool(core_tool(a + "." + op, opkey, {p}));
    add_tool(ToolSpec{b + "." + op, {p}, {dv("upper", {braced(p)}, "h"), wr(opkey + ":" + braced(p), "{h}")}, "{h}", false});
    EquivalenceSet vr{d_.name + ".decoy.vendor", Scheme::VR, {}, {}};
    vr.members.push_back(Segment{{ActionPattern{a + "." + op, {slot_arg(p, p)}}}});
    vr.members.push_back(Segment{{ActionPattern{b + "." + op, {slot_arg(p, p)}}}});
    add_decoy(std::move(vr));

    const auto base = service() + "." + next_op();
    const auto base_key = lower(base);
    const auto ps = params(2);
    add_tool(core_tool(base, base_key, {ps[0].name, ps[1].name}));
    const auto side = base + "Touch";
    add_tool(ToolSpec{side, {ps[0].name}, {wr(base_key + ":" + braced(ps[0].name), "touched"), lg("touch")}, "ok", false});
    const ActionPattern base_pat{base, {slot_arg(ps[0].name, ps[0].name), slot_arg(ps[1].name, ps[1].name)}};
    EquivalenceSet ae{d_.name + ".decoy.audit", Scheme::AE, {}, {}};
    ae.members.push_back(Segment{{base_pat}});
    ae.members.push_back(Segment{{base_pat, ActionPattern{side, {slot_arg(ps[0].name, ps[0].name)}}}});
    add_decoy(std::move(ae));
  }

  // Ordinary tools that never take part in a set. Families of look-alike
  // names with different behaviour give name-based attacks something to trip on.
  void build_fillers(std::size_t families) {
    static const char* kVariants[] = {"Cached", "Async", "Batch", "Preview"};
    for (std::size_t f = 0; f < families; ++f) {
      const auto svc = service();
      std::string op;
      do {
        op = vocab_.verbs[pick(vocab_.verbs.size())] + vocab_.nouns[pick(vocab_.nouns.size())];
      } while (tool_taken(svc + "." + op));
      const auto key = lower(svc + op);
      const auto ps = params(1 + pick(2));
      std::vector<std::string> names;
      for (const auto& p : ps) names.push_back(p.name);
      const bool reader = f % 2 == 0;
      auto make = [&](const std::string& name, const std::string& flavour) {
        ToolSpec t{name, names, {}, {}, false};
        if (reader) {
          t.effects = {rd(key + ":" + braced(names[0]), "v")};
          t.returns = flavour + "{v}";
        } else {
          t.effects = {dv("hash", {key, flavour, braced(names.back())}, "h"), wr(key + ":" + braced(names[0]), "{h}")};
          t.returns = "{h}";
        }
        add_tool(t);
        fillers_.push_back(std::move(t));
      };
      make(svc + "." + op, "");
      const std::size_t extra = f % 3 == 0 ? 0 : 1 + pick(2);
      for (std::size_t v = 0; v < extra; ++v) make(svc + "." + op + kVariants[(f + v) % 4], kVariants[(f + v) % 4]);
    }
  }

  void build_templates(std::size_t count, std::size_t min_len, std::size_t max_len) {
    std::vector<std::string> order;
    std::size_t cursor = 0;
    auto next_set = [&]() {
      if (cursor == order.size()) {
        order = valid_ids_;
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[pick(i)]);
        cursor = 0;
      }
      return order[cursor++];
    };
    for (std::size_t t = 0; t < count; ++t) {
      QueryTemplate q;
      q.id = d_.name + ".task." + std::to_string(t + 1);
      const std::size_t len = min_len + pick(max_len - min_len + 1);
      const std::size_t slots = 1 + pick(2);
      std::vector<bool> is_slot(len, false);
      for (std::size_t s = 0; s < slots;) {
        const auto pos = pick(len);
        if (!is_slot[pos]) {
          is_slot[pos] = true;
          ++s;
        }
      }
      std::set<std::string> in_template;
      for (std::size_t i = 0; i < len; ++i) {
        TemplateStep step;
        if (is_slot[i]) {
          do step.set_id = next_set();
          while (in_template.count(step.set_id) && in_template.size() < valid_ids_.size());
          in_template.insert(step.set_id);
        } else {
          const auto& f = fillers_[pick(fillers_.size())];
          step.tool = f.name;
          for (const auto& p : f.params) step.args.push_back({p, p});
        }
        q.steps.push_back(std::move(step));
      }
      d_.templates.push_back(std::move(q));
    }
  }

 private:
  static void fill_mappings(EquivalenceSet& set) {
    for (std::size_t from = 0; from < set.arity(); ++from) {
      for (std::size_t to = 0; to < set.arity(); ++to) {
        if (from == to || set.mappings.count({from, to})) continue;
        ParamMapping m;
        for (const auto& target : set.members[to].patterns) {
          std::map<std::string, ArgSource> entries;
          for (const auto& arg : target.args) {
            if (!arg.is_slot()) continue;
            const auto& src = set.members[from].patterns;
            for (std::size_t i = 0; i < src.size(); ++i) {
              auto hit = std::find_if(src[i].args.begin(), src[i].args.end(),
                                      [&](const PatternArg& x) { return x.is_slot() && x.slot() == arg.slot(); });
              if (hit != src[i].args.end()) {
                entries.emplace(arg.name, SlotRef{i, arg.slot()});
                break;
              }
            }
          }
          m.actions.push_back(std::move(entries));
        }
        set.mappings.emplace(std::make_pair(from, to), std::move(m));
      }
    }
  }

  Vocab vocab_;
  Engine rng_;
  DomainSpec d_;
  std::set<std::string> used_ops_;
  std::set<std::string> used_tools_;
  std::vector<std::string> valid_ids_;
  std::vector<ToolSpec> fillers_;
};

}  // namespace

const std::vector<std::string>& builtin_domain_names() {
  static const std::vector<std::string> names{"data", "business", "social"};
  return names;
}

bool is_builtin_name(std::string_view name) {
  const auto& names = builtin_domain_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

SchemeCounts builtin_scheme_counts(std::string_view name) {
  if (name == "data") return {8, 7, 11, 7, 6};
  if (name == "business") return {12, 4, 5, 5, 2};
  if (name == "social") return {18, 2, 6, 3, 5};
  throw Error(ErrorCode::SchemaViolation, "unknown built-in domain '" + std::string(name) + "'");
}

DomainSpec builtin_domain(std::string_view name) {
  const auto counts = builtin_scheme_counts(name);
  Vocab vocab = name == "data" ? data_vocab() : name == "business" ? business_vocab() : social_vocab();
  Builder b{std::string(name), std::move(vocab)};
  b.build_vr(counts.vr);
  b.build_pgr(counts.pgr);
  b.build_ia(counts.ia);
  b.build_ae(counts.ae);
  b.build_ce(counts.ce);
  b.build_decoys();
  b.build_fillers(24);
  b.build_templates(64, 40, 56);
  return b.finish();
}

}  // namespace trajmark
