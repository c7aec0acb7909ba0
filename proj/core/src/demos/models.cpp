#include "mmsf/demos/demos.hpp"

namespace mmsf::demos {

// Kept in sync with fixtures/*.xmml; the unit tests compare them.

std::string_view isr_model_xml() {
  return R"xmml(<?xml version="1.0" encoding="UTF-8"?>
<!--
  In-stent restenosis: smooth muscle cells (SMC) drive the loop once per
  macro-iteration. Cell positions become an occupancy grid for thrombus
  formation (ITF), whose geometry feeds blood flow (BF) and drug diffusion
  (DD); both return fields to SMC. Scale values are illustrative.
-->
<model name="isr">
  <submodel id="SMC" dt="3600" total_time="10800" dx="1e-05" extent="0.00048" impl="isr.smc">
    <port name="cells_out" direction="out" operator="O_I" kind="i64-array"/>
    <port name="wss_in" direction="in" operator="B" kind="f64-grid"/>
    <port name="drug_in" direction="in" operator="B" kind="f64-grid"/>
  </submodel>
  <submodel id="ITF" dt="1" total_time="1" dx="1e-05" extent="0.00048" impl="isr.itf">
    <port name="geom_in" direction="in" operator="F_INIT" kind="i64-grid"/>
    <port name="geom_out" direction="out" operator="O_F" kind="i64-grid"/>
  </submodel>
  <submodel id="BF" dt="0.0001" total_time="0.02" dx="1e-05" extent="0.00048" impl="isr.bf">
    <port name="geom_in" direction="in" operator="F_INIT" kind="i64-grid"/>
    <port name="wss_out" direction="out" operator="O_F" kind="f64-grid"/>
  </submodel>
  <submodel id="DD" dt="1" total_time="40" dx="1e-05" extent="0.00048" impl="isr.dd">
    <port name="field_in" direction="in" operator="F_INIT" kind="f64-grid"/>
    <port name="drug_out" direction="out" operator="O_F" kind="f64-grid"/>
  </submodel>
  <mapper id="a2g" kind="agents-to-grid" in="i64-array" out="i64-grid"/>
  <mapper id="g2f" kind="grid-to-fields" in="i64-grid" out="f64-grid"/>
  <mapper id="wss" kind="passthrough" in="f64-grid" out="f64-grid"/>
  <conduit id="smc_itf" from="SMC.cells_out" to="ITF.geom_in" via="a2g"/>
  <conduit id="itf_bf" from="ITF.geom_out" to="BF.geom_in"/>
  <conduit id="itf_dd" from="ITF.geom_out" to="DD.field_in" via="g2f"/>
  <conduit id="bf_smc" from="BF.wss_out" to="SMC.wss_in" via="wss"/>
  <conduit id="dd_smc" from="DD.drug_out" to="SMC.drug_in"/>
</model>
)xmml";
}

std::string_view hemo_model_xml() {
  return R"xmml(<?xml version="1.0" encoding="UTF-8"?>
<!--
  Arterial flow: a fine lattice-Boltzmann region exchanges four outlet
  pressures and flow rates with a coarse lumped pressure model. The coarse
  step equals 100 fine steps.
-->
<model name="hemo">
  <submodel id="fine" dt="2.3766e-06" total_time="0.95064" impl="hemo.fine">
    <port name="flow_out" direction="out" operator="O_I" kind="f64-array"/>
    <port name="pressure_in" direction="in" operator="B" kind="f64-array"/>
  </submodel>
  <submodel id="coarse" dt="0.00023766" total_time="0.95064" impl="hemo.coarse">
    <port name="pressure_out" direction="out" operator="O_I" kind="f64-array"/>
    <port name="flow_in" direction="in" operator="B" kind="f64-array"/>
  </submodel>
  <conduit id="pressure" from="coarse.pressure_out" to="fine.pressure_in" transport="tcp"/>
  <conduit id="flow" from="fine.flow_out" to="coarse.flow_in" transport="tcp"/>
</model>
)xmml";
}

std::string_view hemo_ss_model_xml() {
  return R"xmml(<?xml version="1.0" encoding="UTF-8"?>
<!-- Single-scale arterial flow: the fine region with constant outlet pressures. -->
<model name="hemo-ss">
  <submodel id="fine" dt="2.3766e-06" total_time="0.95064" impl="hemo.fine"/>
</model>
)xmml";
}

}  // namespace mmsf::demos
