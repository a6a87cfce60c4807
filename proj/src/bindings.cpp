#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dymecu/baselines.hpp"
#include "dymecu/config.hpp"
#include "dymecu/curiosity.hpp"
#include "dymecu/env.hpp"
#include "dymecu/experiment.hpp"
#include "dymecu/mlp.hpp"
#include "dymecu/optim.hpp"
#include "dymecu/ppo.hpp"
#include "dymecu/scores.hpp"

namespace py = pybind11;
using namespace dymecu;

namespace {

MlpSpec make_spec(int input_dim, const std::vector<int>& hidden, int output_dim,
                  const std::string& activation) {
    return MlpSpec{input_dim, hidden, output_dim, activation_from_string(activation)};
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "curiosity-driven exploration toolkit (C++ core)";

    py::class_<MlpSpec>(m, "MlpSpec")
        .def(py::init(&make_spec), py::arg("input_dim"), py::arg("hidden"), py::arg("output_dim"),
             py::arg("activation") = "relu")
        .def_readonly("input_dim", &MlpSpec::input_dim)
        .def_readonly("hidden_dims", &MlpSpec::hidden_dims)
        .def_readonly("output_dim", &MlpSpec::output_dim)
        .def("param_count", &MlpSpec::param_count);

    py::class_<ParamVector>(m, "ParamVector")
        .def_property_readonly("values", [](const ParamVector& p) { return p.values; })
        .def("__len__", [](const ParamVector& p) { return p.values.size(); });

    m.def("zero_params", &zero_params);
    m.def("init_params", &init_params, py::arg("spec"), py::arg("seed"));
    m.def(
        "forward",
        [](const MlpSpec& spec, const ParamVector& p, const std::vector<double>& x) {
            return forward(spec, p, x);
        },
        py::arg("spec"), py::arg("params"), py::arg("x"));
    m.def(
        "backward",
        [](const MlpSpec& spec, const ParamVector& p, const std::vector<double>& x,
           const std::vector<double>& upstream) { return backward(spec, p, x, upstream); },
        py::arg("spec"), py::arg("params"), py::arg("x"), py::arg("upstream"));
    m.def(
        "ema_blend",
        [](const ParamVector& target, const std::vector<ParamVector>& sources, double alpha) {
            std::vector<const ParamVector*> ptrs;
            ptrs.reserve(sources.size());
            for (const auto& s : sources) ptrs.push_back(&s);
            return ema_blend(target, ptrs, alpha);
        },
        py::arg("target"), py::arg("sources"), py::arg("alpha"));

    m.def(
        "intrinsic_reward",
        [](const std::vector<double>& z1, const std::vector<double>& z2) {
            return intrinsic_reward(z1, z2);
        },
        py::arg("z1"), py::arg("z2"));
    m.def(
        "learner_losses",
        [](const std::vector<double>& z1, const std::vector<double>& z2,
           const std::vector<double>& zw) { return learner_losses(z1, z2, zw); },
        py::arg("z1"), py::arg("z2"), py::arg("zw"));

    py::class_<DyMeCu>(m, "DyMeCu")
        .def(py::init([](const MlpSpec& encoder, double alpha, double lr, bool normalize,
                         std::uint64_t seed, const std::string& variant,
                         const std::vector<int>& extra_hidden) {
                 DyMeCuConfig cfg;
                 cfg.encoder = encoder;
                 cfg.alpha = alpha;
                 cfg.lr = lr;
                 cfg.normalize = normalize;
                 if (variant == "one_learner") cfg.variant = DyMeCuVariant::one_learner;
                 else if (variant == "predictor_heads") cfg.variant = DyMeCuVariant::predictor_heads;
                 else if (variant != "dual")
                     throw std::invalid_argument("variant must be dual, one_learner or "
                                                 "predictor_heads");
                 cfg.extra_hidden = extra_hidden;
                 return DyMeCu(cfg, seed);
             }),
             py::arg("encoder"), py::arg("alpha") = 0.99, py::arg("lr") = 1e-3,
             py::arg("normalize") = true, py::arg("seed") = 1, py::arg("variant") = "dual",
             py::arg("extra_hidden") = std::vector<int>{})
        .def("encode_all",
             [](const DyMeCu& d, const std::vector<double>& s) {
                 const auto e = d.encode_all(s);
                 return py::make_tuple(e.z1, e.z2, e.zw);
             })
        .def("raw_reward",
             [](const DyMeCu& d, const std::vector<double>& s) { return d.raw_reward(s); })
        .def("one_learner_reward", [](const DyMeCu& d, const std::vector<double>& s) {
            return d.one_learner_reward(s);
        })
        .def("update_learners",
             [](DyMeCu& d, const std::vector<std::vector<double>>& states) {
                 return d.update_learners(states);
             })
        .def("consolidate_memory", &DyMeCu::consolidate_memory)
        .def("normalize_reward", &DyMeCu::normalize_reward)
        .def("checkpoint", [](const DyMeCu& d) { return d.checkpoint().dump(); })
        .def_static("from_checkpoint", [](const std::string& text) {
            return DyMeCu::from_checkpoint(nlohmann::json::parse(text));
        });

    py::class_<GridWorld>(m, "GridWorld")
        .def(py::init<int, int, int, int, int, bool>(), py::arg("width"), py::arg("height"),
             py::arg("goal_x"), py::arg("goal_y"), py::arg("max_steps"), py::arg("onehot") = true)
        .def("reset", &GridWorld::reset)
        .def("step",
             [](GridWorld& e, int action) {
                 const auto r = e.step(action);
                 return py::make_tuple(r.obs, r.reward, r.done);
             })
        .def("obs_dim", &GridWorld::obs_dim)
        .def("num_actions", &GridWorld::num_actions)
        .def("num_states", &GridWorld::num_states)
        .def("state_index", &GridWorld::state_index);

    py::class_<ChainMdp>(m, "ChainMdp")
        .def(py::init<int, int, double>(), py::arg("n"), py::arg("max_steps"),
             py::arg("slip_prob") = 0.0)
        .def("reset", &ChainMdp::reset)
        .def("step",
             [](ChainMdp& e, int action) {
                 const auto r = e.step(action);
                 return py::make_tuple(r.obs, r.reward, r.done);
             })
        .def("obs_dim", &ChainMdp::obs_dim)
        .def("num_actions", &ChainMdp::num_actions)
        .def("num_states", &ChainMdp::num_states)
        .def("state_index", &ChainMdp::state_index);

    m.def("hns", &hns, py::arg("agent"), py::arg("random_score"), py::arg("human_score"));
    m.def("bns", &bns, py::arg("method"), py::arg("random_score"), py::arg("baseline_avg"));
    m.def("total_reward", &total_reward, py::arg("r_int"), py::arg("r_ext"), py::arg("cfg"));

    py::class_<PpoConfig>(m, "PpoConfig")
        .def(py::init<>())
        .def_readwrite("gamma", &PpoConfig::gamma)
        .def_readwrite("lambda_gae", &PpoConfig::lambda_gae)
        .def_readwrite("clip_eps", &PpoConfig::clip_eps)
        .def_readwrite("zeta", &PpoConfig::zeta)
        .def_readwrite("beta", &PpoConfig::beta)
        .def_readwrite("lr", &PpoConfig::lr)
        .def_readwrite("rollout_steps", &PpoConfig::rollout_steps);

    m.def(
        "compute_gae",
        [](const std::vector<double>& rewards, const std::vector<double>& values,
           const std::vector<bool>& dones, double bootstrap_value, const PpoConfig& cfg) {
            RolloutBuffer buf;
            for (std::size_t i = 0; i < rewards.size(); ++i) {
                buf.obs.push_back({});
                buf.next_obs.push_back({});
                buf.actions.push_back(0);
                buf.log_probs.push_back(0.0);
                buf.values.push_back(values[i]);
                buf.r_ext.push_back(rewards[i]);
                buf.r_total.push_back(rewards[i]);
                buf.r_int_raw.push_back(0.0);
                buf.r_int_norm.push_back(0.0);
                buf.dones.push_back(dones[i] ? 1 : 0);
            }
            buf.bootstrap_value = bootstrap_value;
            const auto g = compute_gae(buf, cfg);
            return py::make_tuple(g.advantages, g.returns);
        },
        py::arg("rewards"), py::arg("values"), py::arg("dones"), py::arg("bootstrap_value"),
        py::arg("cfg"));

    m.def("load_config", &load_config, py::arg("path"));
    m.def("parse_config", &parse_config, py::arg("text"));
    m.def("serialize_config", &serialize_config, py::arg("cfg"));
    m.def("validate_config", &validate, py::arg("cfg"));

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_property(
            "module", [](const RunConfig& c) { return to_string(c.run.module); },
            [](RunConfig& c, const std::string& m_) { c.run.module = module_from_string(m_); })
        .def_property(
            "seeds", [](const RunConfig& c) { return c.run.seeds; },
            [](RunConfig& c, const std::vector<long>& s) { c.run.seeds = s; })
        .def_property(
            "total_steps", [](const RunConfig& c) { return c.run.total_steps; },
            [](RunConfig& c, long v) { c.run.total_steps = v; })
        .def_property(
            "out_dir", [](const RunConfig& c) { return c.run.out_dir; },
            [](RunConfig& c, const std::string& v) { c.run.out_dir = v; });

    m.def(
        "train_once",
        [](const RunConfig& cfg, std::uint64_t seed) {
            const auto log = train_loop(cfg, seed);
            py::list records;
            for (const auto& r : log.records)
                records.append(py::module_::import("json").attr("loads")(
                    record_to_json(r, true).dump()));
            return records;
        },
        py::arg("cfg"), py::arg("seed"), "run one seeded training loop; returns metric records");

    m.def(
        "run_experiment",
        [](const RunConfig& cfg, int jobs) {
            RunOptions opt;
            opt.jobs = jobs;
            opt.quiet = true;
            return run_experiment(cfg, opt);
        },
        py::arg("cfg"), py::arg("jobs") = 1);

    py::register_exception<FlaggedRowError>(m, "FlaggedRowError");
}
