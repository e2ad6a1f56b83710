#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <vector>

#include "phoenixsim/sim_core.hpp"

using namespace phoenixsim;

TEST_CASE("events at equal times pop in kind-priority order") {
  Engine engine(1000);
  std::vector<EventKind> seen;
  engine.schedule(10, EventKind::job_submit, 1);
  engine.schedule(10, EventKind::setup_done, 2);
  engine.schedule(10, EventKind::job_complete, 3);
  engine.schedule(10, EventKind::lease_timer, 4);
  engine.schedule(10, EventKind::ws_demand_change, 5);
  engine.run([&](const Event& ev) { seen.push_back(ev.kind); });
  CHECK(seen == std::vector<EventKind>{EventKind::job_complete,
                                       EventKind::ws_demand_change,
                                       EventKind::lease_timer, EventKind::job_submit,
                                       EventKind::setup_done});
}

TEST_CASE("equal time and kind breaks ties by enqueue order") {
  Engine engine(100);
  std::vector<int64_t> order;
  engine.schedule(5, EventKind::job_submit, 11);
  engine.schedule(5, EventKind::job_submit, 22);
  engine.schedule(5, EventKind::job_submit, 33);
  engine.run([&](const Event& ev) { order.push_back(ev.p0); });
  CHECK(order == std::vector<int64_t>{11, 22, 33});
}

TEST_CASE("the clock never regresses and stops past the horizon") {
  Engine engine(50);
  std::vector<int64_t> times;
  engine.schedule(10, EventKind::job_submit);
  engine.schedule(50, EventKind::job_submit);
  engine.schedule(51, EventKind::job_submit);
  engine.run([&](const Event&) { times.push_back(engine.now()); });
  CHECK(times == std::vector<int64_t>{10, 50});
}

TEST_CASE("handlers may chain events but never into the past") {
  Engine engine(100);
  int fired = 0;
  engine.schedule(10, EventKind::lease_timer);
  engine.run([&](const Event& ev) {
    ++fired;
    if (ev.time_s == 10) {
      engine.schedule(10, EventKind::setup_done);  // same instant is fine
      CHECK_THROWS_AS(engine.schedule(9, EventKind::setup_done), SimError);
    }
  });
  CHECK(fired == 2);
}

TEST_CASE("event processing order is deterministic") {
  auto run_once = [] {
    Engine engine(10000);
    std::mt19937_64 rng(99);
    for (int i = 0; i < 500; ++i)
      engine.schedule(static_cast<int64_t>(rng() % 1000),
                      static_cast<EventKind>(rng() % 5),
                      static_cast<int64_t>(i));
    std::vector<std::pair<int64_t, int64_t>> log;
    engine.run([&](const Event& ev) { log.emplace_back(ev.time_s, ev.p0); });
    return log;
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("transfer moves nodes atomically at zero latency") {
  ClusterLedger ledger;
  ledger.total_nodes = 100;
  ledger.provider_idle = 40;
  ledger.pbj_owned = 40;
  ledger.ws_owned = 20;

  auto pending = ledger.transfer(Pool::provider, Pool::pbj, 10, 0, 0);
  CHECK(!pending.has_value());
  CHECK(ledger.provider_idle == 30);
  CHECK(ledger.pbj_owned == 50);
  ledger.check("test");
}

TEST_CASE("transfer with latency parks nodes in pending setup") {
  ClusterLedger ledger;
  ledger.total_nodes = 100;
  ledger.provider_idle = 40;
  ledger.pbj_owned = 40;
  ledger.ws_owned = 20;

  auto pending = ledger.transfer(Pool::provider, Pool::ws, 10, 300, 1000);
  REQUIRE(pending.has_value());
  CHECK(ledger.provider_idle == 30);
  CHECK(ledger.ws_owned == 20);  // not yet usable
  CHECK(ledger.pending_total() == 10);
  ledger.check("in flight");

  ledger.apply_setup(*pending);
  CHECK(ledger.ws_owned == 30);
  CHECK(ledger.pending_total() == 0);
  ledger.check("arrived");
  CHECK_THROWS_AS(ledger.apply_setup(*pending), SimError);
}

TEST_CASE("over-drawing a pool is a fatal accounting violation") {
  ClusterLedger ledger;
  ledger.total_nodes = 20;
  ledger.pbj_owned = 8;
  ledger.pbj_in_use = 5;
  ledger.ws_owned = 12;

  // only 3 idle in the PBJ pool
  CHECK_THROWS_AS(ledger.transfer(Pool::pbj, Pool::ws, 5, 0, 0), SimError);
  CHECK_THROWS_AS(ledger.transfer(Pool::provider, Pool::pbj, 1, 0, 0), SimError);
  CHECK(ledger.pbj_owned == 8);
}

TEST_CASE("conservation check catches a broken ledger") {
  ClusterLedger ledger;
  ledger.total_nodes = 50;
  ledger.provider_idle = 10;
  ledger.pbj_owned = 20;
  ledger.ws_owned = 20;
  ledger.check("balanced");
  ledger.ws_owned = 25;
  CHECK_THROWS_AS(ledger.check("unbalanced"), SimError);
}

TEST_CASE("an unbounded provider mints and retires nodes") {
  ClusterLedger ledger;  // total_nodes unset
  ledger.transfer(Pool::provider, Pool::pbj, 500, 0, 0);
  CHECK(ledger.pbj_owned == 500);
  CHECK(ledger.provider_idle == 0);
  ledger.transfer(Pool::pbj, Pool::provider, 200, 0, 0);
  CHECK(ledger.pbj_owned == 300);
  CHECK(ledger.provider_idle == 0);
  ledger.check("unbounded");
}
