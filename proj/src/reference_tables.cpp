#include "dip/reference_tables.hpp"

namespace dip::reference {

const std::vector<PublishedTable>& published_tables() {
  static const std::vector<PublishedTable> tables{
      {"deterioration localization",
       {"Healthy", "Scenario 1", "Scenario 2", "Scenario 3"},
       {{76, 2, 1, 1}, {1, 77, 2, 1}, {1, 2, 75, 2}, {1, 2, 1, 76}},
       {{0.95, 0.962, 0.9875, 0.9560},
        {0.9625, 0.9277, 0.975, 0.9448},
        {0.9375, 0.9493, 0.9834, 0.9434},
        {0.95, 0.95, 0.9834, 0.9500}},
       {0.9470, 0.9472, 0.9823, 0.9486},
       0.9470},
      {"deterioration severity, scenario 1",
       {"State 2", "State 3", "State 4", "State 5"},
       {{19, 1, 0, 0}, {0, 20, 0, 0}, {0, 1, 19, 0}, {0, 0, 0, 20}},
       {{0.95, 1.00, 1.00, 1.00},
        {1.00, 0.9090, 0.9667, 0.9370},
        {0.95, 1.00, 1.00, 1.00},
        {1.00, 1.00, 1.00, 1.00}},
       {0.975, 0.9772, 0.9917, 0.9843},
       0.975},
      {"deterioration severity, scenario 2",
       {"State 2", "State 3", "State 4", "State 5"},
       {{20, 0, 0, 0}, {0, 19, 1, 0}, {0, 0, 20, 0}, {0, 0, 0, 20}},
       {{1.00, 1.00, 1.00, 1.00},
        {0.95, 1.00, 1.00, 0.9744},
        {1.00, 0.9524, 0.9833, 0.9756},
        {1.00, 1.00, 1.00, 1.00}},
       {0.9875, 0.9881, 0.9958, 0.9875},
       0.9875},
      {"deterioration severity, scenario 3",
       {"State 2", "State 3", "State 4", "State 5"},
       {{20, 0, 0, 0}, {0, 20, 0, 0}, {0, 1, 19, 0}, {0, 0, 1, 19}},
       {{1.00, 1.00, 1.00, 1.00},
        {1.00, 0.9524, 0.9833, 0.9756},
        {0.95, 0.95, 0.9833, 0.9500},
        {0.95, 1.00, 1.00, 0.9744}},
       {0.975, 0.9756, 0.9916, 0.975},
       0.975},
      {"damage localization",
       {"Healthy", "Story 1", "Story 2", "Story 3"},
       {{47, 3, 0, 0}, {2, 198, 0, 0}, {0, 1, 99, 0}, {0, 2, 0, 98}},
       {{0.94, 0.959, 0.996, 0.949},
        {0.99, 0.971, 0.976, 0.98},
        {0.99, 1, 1, 0.995},
        {0.98, 1, 1, 0.989}},
       {0.982, 0.982, 0.989, 0.982},
       0.982},
      {"damage severity, story 1",
       {"State 2", "State 3", "State 4", "State 5"},
       {{49, 1, 0, 0}, {2, 48, 0, 0}, {0, 0, 48, 2}, {0, 0, 1, 49}},
       {{0.98, 0.961, 0.987, 0.973},
        {0.96, 0.979, 0.993, 0.986},
        {0.96, 0.979, 0.993, 0.986},
        {0.98, 0.961, 0.986, 0.973}},
       {0.97, 0.97, 0.989, 0.979},
       0.97},
      {"damage severity, story 2",
       {"State 6", "State 7"},
       {{49, 1}, {0, 50}},
       {{0.98, 1, 1, 1}, {1, 0.98, 0.98, 0.98}},
       {0.99, 0.99, 0.99, 0.99},
       0.99},
      {"damage severity, story 3",
       {"State 8", "State 9"},
       {{49, 1}, {1, 49}},
       {{0.98, 0.98, 0.98, 0.98}, {0.98, 0.98, 0.98, 0.98}},
       {0.98, 0.98, 0.98, 0.98},
       0.98},
  };
  return tables;
}

}  // namespace dip::reference
