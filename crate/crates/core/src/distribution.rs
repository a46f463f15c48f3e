//! Communication plans (gather/scatter schedules between ranks) and the
//! directory that answers which rank owns an arbitrary global index.
//!
//! A [`CommPlan`] is built collectively, then executed any number of times
//! with fixed-size opaque byte items; the same plan routes indices, values,
//! or packed pairs. Reverse execution exactly inverts the forward routing.

use crate::block_map::{uniform_share, BlockMap};
use crate::comm::Comm;
use crate::error::{Error, Result};
use std::collections::HashMap;

/// Direction of a plan execution. `Forward` moves items from the export
/// side to the import side; `Reverse` inverts it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanDirection {
    Forward,
    Reverse,
}

/// Reusable schedule describing which items travel between which ranks.
#[derive(Debug)]
pub struct CommPlan {
    comm: Comm,
    /// Destination rank per export item, in plan send order. Nondecreasing
    /// when the plan was built deterministically.
    export_procs: Vec<i32>,
    /// Plan slot -> caller item index at construction time.
    export_perm: Vec<usize>,
    /// Source rank per import item, grouped by source rank ascending.
    import_procs: Vec<i32>,
    /// Import item count expected from each rank.
    import_counts: Vec<usize>,
    deterministic: bool,
}

impl CommPlan {
    /// Builds a plan from each rank's list of destination ranks, one entry
    /// per item to send. Returns the plan and the number of items this rank
    /// will receive. Collective.
    ///
    /// With `deterministic` set, the plan's send order is stably grouped by
    /// destination rank; [`CommPlan::export_permutation`] maps plan slots
    /// back to the caller's item order.
    pub fn create_from_sends(
        comm: &Comm,
        export_procs: &[i32],
        deterministic: bool,
    ) -> Result<(CommPlan, i32)> {
        let size = comm.size() as usize;
        let mut local_error = None;
        if let Some(&bad) = export_procs.iter().find(|&&p| p < 0 || p as usize >= size) {
            local_error = Some(Error::Contract(format!(
                "export destination rank {bad} out of range (size {size})"
            )));
        }
        comm.agree_on_error(local_error)?;

        let mut counts = vec![0i64; size];
        for &p in export_procs {
            counts[p as usize] += 1;
        }
        // counts matrix, all ranks: row s = rank s's per-destination counts.
        let matrix = comm.gather_all(&counts)?;
        let me = comm.rank() as usize;
        let mut import_procs = Vec::new();
        let mut import_counts = vec![0usize; size];
        for src in 0..size {
            let n = matrix[src * size + me] as usize;
            import_counts[src] = n;
            import_procs.extend(std::iter::repeat_n(src as i32, n));
        }

        let mut export_perm: Vec<usize> = (0..export_procs.len()).collect();
        if deterministic {
            export_perm.sort_by_key(|&i| export_procs[i]);
        }
        let ordered_procs: Vec<i32> = export_perm.iter().map(|&i| export_procs[i]).collect();

        let import_total = import_procs.len() as i32;
        Ok((
            CommPlan {
                comm: comm.clone(),
                export_procs: ordered_procs,
                export_perm,
                import_procs,
                import_counts,
                deterministic,
            },
            import_total,
        ))
    }

    /// Builds a plan from each rank's list of wanted remote global indices
    /// and their owning ranks. Returns the plan plus, on the owner side,
    /// exactly which of its indices were requested and by whom
    /// (`export_gids`, `export_procs`). The plan's forward direction moves
    /// data owner -> requester. Collective.
    pub fn create_from_recvs(
        comm: &Comm,
        remote_gids: &[i64],
        remote_procs: &[i32],
        deterministic: bool,
    ) -> Result<(CommPlan, Vec<i64>, Vec<i32>)> {
        let mut local_error = None;
        if remote_gids.len() != remote_procs.len() {
            local_error = Some(Error::Contract(format!(
                "remote index count {} != remote rank count {}",
                remote_gids.len(),
                remote_procs.len()
            )));
        }
        comm.agree_on_error(local_error)?;

        // Route each request to its owner; the owner side of that exchange
        // is exactly the export side of the plan being built.
        let (request_plan, _) = CommPlan::create_from_sends(comm, remote_procs, deterministic)?;
        let mut payload = Vec::with_capacity(request_plan.export_count() * 8);
        for &slot_src in &request_plan.export_perm {
            payload.extend_from_slice(&remote_gids[slot_src].to_le_bytes());
        }
        let received = request_plan.execute(PlanDirection::Forward, 8, &payload)?;
        let export_gids: Vec<i64> = received
            .chunks_exact(8)
            .map(|c| i64::from_le_bytes(c.try_into().expect("8-byte item")))
            .collect();
        let export_procs = request_plan.import_procs.clone();

        // Import side: my own requests, grouped by owner rank ascending,
        // original order within one owner.
        let size = comm.size() as usize;
        let mut import_counts = vec![0usize; size];
        for &p in remote_procs {
            import_counts[p as usize] += 1;
        }
        let mut import_procs = Vec::with_capacity(remote_procs.len());
        for (src, &n) in import_counts.iter().enumerate() {
            import_procs.extend(std::iter::repeat_n(src as i32, n));
        }

        let export_perm = (0..export_gids.len()).collect();
        Ok((
            CommPlan {
                comm: comm.clone(),
                export_procs: export_procs.clone(),
                export_perm,
                import_procs,
                import_counts,
                deterministic,
            },
            export_gids,
            export_procs,
        ))
    }

    pub fn export_count(&self) -> usize {
        self.export_procs.len()
    }

    pub fn import_count(&self) -> usize {
        self.import_procs.len()
    }

    /// Destination rank per export item, in plan send order.
    pub fn export_procs(&self) -> &[i32] {
        &self.export_procs
    }

    /// Source rank per import item, grouped by source rank ascending.
    pub fn import_procs(&self) -> &[i32] {
        &self.import_procs
    }

    /// Plan slot -> caller item index at construction time.
    pub fn export_permutation(&self) -> &[usize] {
        &self.export_perm
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    /// Moves one batch of fixed-size items along the plan.
    ///
    /// Forward: `send` holds `export_count` items in plan send order; the
    /// result holds `import_count` items grouped by source rank. Reverse
    /// swaps the roles, exactly inverting the forward routing.
    pub fn execute(
        &self,
        direction: PlanDirection,
        item_bytes: usize,
        send: &[u8],
    ) -> Result<Vec<u8>> {
        if item_bytes == 0 {
            return Err(Error::Contract("item size must be positive".into()));
        }
        let (send_procs, recv_procs, recv_counts) = match direction {
            PlanDirection::Forward => (
                &self.export_procs,
                &self.import_procs,
                self.import_counts.clone(),
            ),
            PlanDirection::Reverse => {
                let size = self.comm.size() as usize;
                let mut counts = vec![0usize; size];
                for &p in &self.export_procs {
                    counts[p as usize] += 1;
                }
                (&self.import_procs, &self.export_procs, counts)
            }
        };
        if send.len() != send_procs.len() * item_bytes {
            return Err(Error::Contract(format!(
                "send buffer holds {} bytes, plan requires {} items of {} bytes",
                send.len(),
                send_procs.len(),
                item_bytes
            )));
        }

        let size = self.comm.size() as usize;
        // Group outgoing items by destination, preserving slot order.
        let mut batches: Vec<Vec<u8>> = vec![Vec::new(); size];
        for (slot, &dst) in send_procs.iter().enumerate() {
            batches[dst as usize]
                .extend_from_slice(&send[slot * item_bytes..(slot + 1) * item_bytes]);
        }
        let me = self.comm.rank() as usize;
        let mut self_batch = Vec::new();
        for (dst, batch) in batches.into_iter().enumerate() {
            if batch.is_empty() {
                continue;
            }
            if dst == me {
                self_batch = batch;
            } else {
                self.comm.send_bytes(dst as i32, batch)?;
            }
        }

        // Receive grouped by source rank ascending; within one source the
        // sender's slot order is preserved by the ordered channel.
        let mut incoming: Vec<Vec<u8>> = Vec::with_capacity(size);
        for (src, &count) in recv_counts.iter().enumerate() {
            if count == 0 {
                incoming.push(Vec::new());
            } else if src == me {
                incoming.push(std::mem::take(&mut self_batch));
            } else {
                let batch = self.comm.recv_bytes(src as i32)?;
                if batch.len() != count * item_bytes {
                    return Err(Error::Contract(format!(
                        "rank {src} sent {} bytes, expected {} items of {} bytes",
                        batch.len(),
                        count,
                        item_bytes
                    )));
                }
                incoming.push(batch);
            }
        }

        match direction {
            PlanDirection::Forward => {
                // Import order is exactly source-grouped ascending.
                Ok(incoming.concat())
            }
            PlanDirection::Reverse => {
                // Scatter each source batch back into this rank's export
                // slots for that source, in slot order.
                let mut out = vec![0u8; recv_procs.len() * item_bytes];
                let mut taken = vec![0usize; size];
                for (slot, &src) in recv_procs.iter().enumerate() {
                    let s = src as usize;
                    let at = taken[s];
                    out[slot * item_bytes..(slot + 1) * item_bytes]
                        .copy_from_slice(&incoming[s][at * item_bytes..(at + 1) * item_bytes]);
                    taken[s] = at + 1;
                }
                Ok(out)
            }
        }
    }
}

/// Result of a directory query; `lids`/`sizes` are present when requested.
#[derive(Debug, Clone)]
pub struct DirectoryEntries {
    pub procs: Vec<i32>,
    pub lids: Option<Vec<i32>>,
    pub sizes: Option<Vec<i32>>,
}

/// Lookup structure resolving arbitrary global indices to owning ranks.
///
/// Contiguous maps answer queries arithmetically with zero messages. Other
/// distributed maps use a two-hop scheme: ownership records are registered
/// with the arithmetic owner of each index slot in a uniform registration
/// map spanning `[min_all_gid, max_all_gid]`, and queries are routed to the
/// registrar and back.
#[derive(Debug)]
pub(crate) enum Directory {
    /// Serial or fully replicated map: resolve against the local list.
    Local,
    /// Contiguous map: binary search of the per-rank start offsets.
    Contiguous,
    /// General distributed map: registered ownership records.
    Distributed(DistributedDirectory),
}

#[derive(Debug)]
pub(crate) struct DistributedDirectory {
    reg_min: i64,
    reg_count: i64,
    /// Ownership records for the slice of the registration map this rank
    /// registers: gid -> (owner rank, owner-local index), owners ascending.
    records: HashMap<i64, Vec<(i32, i32)>>,
}

impl Directory {
    /// Builds the directory for `map`. Collective for distributed
    /// non-contiguous maps.
    pub(crate) fn build(map: &BlockMap) -> Result<Directory> {
        if map.is_contiguous() && map.rank_starts().is_some() {
            return Ok(Directory::Contiguous);
        }
        if !map.is_distributed_global() {
            return Ok(Directory::Local);
        }

        let comm = map.comm();
        let size = comm.size();
        let reg_min = map.min_all_gid64();
        let reg_count = map.max_all_gid64() - reg_min + 1;

        // Register every owned (gid, rank, lid) with the arithmetic owner
        // of that gid's slot in the registration map.
        let n = map.num_my_elements() as usize;
        let mut dests = Vec::with_capacity(n);
        for lid in 0..n {
            let gid = map.gid64_unchecked(lid);
            dests.push(registrar_rank(reg_min, reg_count, size, gid));
        }
        let (plan, _) = CommPlan::create_from_sends(comm, &dests, true)?;
        let mut payload = Vec::with_capacity(plan.export_count() * 16);
        for &lid in plan.export_permutation() {
            payload.extend_from_slice(&map.gid64_unchecked(lid).to_le_bytes());
            payload.extend_from_slice(&comm.rank().to_le_bytes());
            payload.extend_from_slice(&(lid as i32).to_le_bytes());
        }
        let received = plan.execute(PlanDirection::Forward, 16, &payload)?;

        let mut records: HashMap<i64, Vec<(i32, i32)>> = HashMap::new();
        for item in received.chunks_exact(16) {
            let gid = i64::from_le_bytes(item[0..8].try_into().expect("gid field"));
            let owner = i32::from_le_bytes(item[8..12].try_into().expect("owner field"));
            let lid = i32::from_le_bytes(item[12..16].try_into().expect("lid field"));
            records.entry(gid).or_default().push((owner, lid));
        }
        for owners in records.values_mut() {
            owners.sort_unstable();
        }
        Ok(Directory::Distributed(DistributedDirectory {
            reg_min,
            reg_count,
            records,
        }))
    }

    pub(crate) fn entries(
        &self,
        map: &BlockMap,
        gids: &[i64],
        want_lids: bool,
        want_sizes: bool,
        high_rank_sharing: bool,
    ) -> Result<DirectoryEntries> {
        let mut procs = vec![-1i32; gids.len()];
        let mut lids = vec![-1i32; gids.len()];
        match self {
            Directory::Local => {
                let comm = map.comm();
                for (i, &gid) in gids.iter().enumerate() {
                    let lid = map.lid_internal(gid);
                    if lid >= 0 {
                        // Replicated maps share every index across all
                        // ranks; serial maps have one rank either way.
                        procs[i] = if high_rank_sharing { comm.size() - 1 } else { 0 };
                        lids[i] = lid;
                    }
                }
            }
            Directory::Contiguous => {
                let starts = map.rank_starts().expect("contiguous map retains starts");
                for (i, &gid) in gids.iter().enumerate() {
                    if map.num_global_elements64() == 0
                        || gid < map.min_all_gid64()
                        || gid > map.max_all_gid64()
                    {
                        continue;
                    }
                    // First rank whose range ends beyond gid.
                    let r = starts[1..].partition_point(|&end| end <= gid);
                    procs[i] = r as i32;
                    lids[i] = (gid - starts[r]) as i32;
                }
            }
            Directory::Distributed(dir) => {
                dir.query(map, gids, high_rank_sharing, &mut procs, &mut lids)?;
            }
        }
        if want_sizes {
            let sizes = procs
                .iter()
                .map(|&p| if p >= 0 { map.element_size() } else { -1 })
                .collect();
            Ok(DirectoryEntries {
                procs,
                lids: if want_lids { Some(lids) } else { None },
                sizes: Some(sizes),
            })
        } else {
            Ok(DirectoryEntries {
                procs,
                lids: if want_lids { Some(lids) } else { None },
                sizes: None,
            })
        }
    }
}

impl DistributedDirectory {
    fn query(
        &self,
        map: &BlockMap,
        gids: &[i64],
        high_rank_sharing: bool,
        procs: &mut [i32],
        lids: &mut [i32],
    ) -> Result<()> {
        let comm = map.comm();
        let size = comm.size();
        // Out-of-range indices are unowned everywhere; only in-range ones
        // travel to their registrar.
        let mut ask_positions = Vec::new();
        let mut dests = Vec::new();
        for (i, &gid) in gids.iter().enumerate() {
            if gid >= self.reg_min && gid < self.reg_min + self.reg_count {
                ask_positions.push(i);
                dests.push(registrar_rank(self.reg_min, self.reg_count, size, gid));
            }
        }
        let (plan, _) = CommPlan::create_from_sends(comm, &dests, true)?;
        let mut payload = Vec::with_capacity(plan.export_count() * 8);
        for &slot in plan.export_permutation() {
            payload.extend_from_slice(&gids[ask_positions[slot]].to_le_bytes());
        }
        let questions = plan.execute(PlanDirection::Forward, 8, &payload)?;

        let mut answers = Vec::with_capacity(questions.len());
        for item in questions.chunks_exact(8) {
            let gid = i64::from_le_bytes(item.try_into().expect("gid item"));
            let (owner, lid) = match self.records.get(&gid) {
                Some(owners) if !owners.is_empty() => {
                    if high_rank_sharing {
                        owners[owners.len() - 1]
                    } else {
                        owners[0]
                    }
                }
                _ => (-1, -1),
            };
            answers.extend_from_slice(&owner.to_le_bytes());
            answers.extend_from_slice(&lid.to_le_bytes());
        }
        let replies = plan.execute(PlanDirection::Reverse, 8, &answers)?;

        for (slot, item) in replies.chunks_exact(8).enumerate() {
            let pos = ask_positions[plan.export_permutation()[slot]];
            procs[pos] = i32::from_le_bytes(item[0..4].try_into().expect("owner field"));
            lids[pos] = i32::from_le_bytes(item[4..8].try_into().expect("lid field"));
        }
        Ok(())
    }
}

/// Arithmetic owner of `gid`'s slot in the uniform registration map.
fn registrar_rank(reg_min: i64, reg_count: i64, size: i32, gid: i64) -> i32 {
    debug_assert!(gid >= reg_min && gid < reg_min + reg_count);
    let slot = gid - reg_min;
    // Invert the uniform division rule.
    let p = i64::from(size);
    let base = reg_count / p;
    let rem = reg_count % p;
    let boundary = rem * (base + 1);
    let rank = if slot < boundary {
        slot / (base + 1)
    } else if base > 0 {
        rem + (slot - boundary) / base
    } else {
        // More ranks than slots: everything past the boundary is unreachable.
        unreachable!("slot beyond registration extent")
    };
    debug_assert!({
        let (start, count) = uniform_share(reg_count, size, rank as i32);
        slot >= start && slot < start + count
    });
    rank as i32
}
